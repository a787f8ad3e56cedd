/** Fixed outcome vocabulary and the grouped-risk aggregation. */

export const CLASS_NAMES = [
  "adverse_event",
  "patient_decision",
  "lack_of_efficacy",
  "loss_to_follow_up",
  "other",
  "continue",
] as const;

export type ClassName = (typeof CLASS_NAMES)[number];

export const CLASS_LABELS: Record<string, string> = {
  adverse_event: "Adverse event",
  patient_decision: "Patient decision",
  lack_of_efficacy: "Lack of efficacy",
  loss_to_follow_up: "Loss to follow-up",
  other: "Other",
  continue: "Continue",
};

/**
 * Grouped discontinuation reasons in display order. Continue belongs to no
 * group; every other class contributes to any_reason plus exactly one
 * cause-specific group, matching the service's outcome grouping.
 */
export const RISK_GROUPS: readonly { name: string; label: string; members: readonly ClassName[] }[] = [
  {
    name: "any_reason",
    label: "Any reason",
    members: ["adverse_event", "patient_decision", "lack_of_efficacy", "loss_to_follow_up", "other"],
  },
  { name: "lack_of_efficacy", label: "Lack of efficacy", members: ["lack_of_efficacy"] },
  { name: "adverse_event", label: "Adverse event", members: ["adverse_event"] },
  {
    name: "other_reasons",
    label: "Other reasons",
    members: ["patient_decision", "loss_to_follow_up", "other"],
  },
];

export interface GroupRisk {
  name: string;
  label: string;
  value: number;
}

/** Sum the six class probabilities into the four grouped bars. */
export function groupRisks(probabilities: Record<string, number>): GroupRisk[] {
  return RISK_GROUPS.map((group) => ({
    name: group.name,
    label: group.label,
    value: group.members.reduce((total, member) => total + (probabilities[member] ?? 0), 0),
  }));
}
