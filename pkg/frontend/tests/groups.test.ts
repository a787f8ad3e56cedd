import { describe, expect, it } from "vitest";

import { CLASS_NAMES, groupRisks, RISK_GROUPS } from "../src/groups.js";
import { loadFixtures } from "./helpers.js";

const fx = loadFixtures();

describe("grouped risks", () => {
  it("covers every discontinuation class exactly once per group axis", () => {
    const anyReason = RISK_GROUPS.find((g) => g.name === "any_reason");
    const causes = RISK_GROUPS.filter((g) => g.name !== "any_reason");
    const discontinuation = CLASS_NAMES.filter((name) => name !== "continue");
    expect(anyReason?.members.slice().sort()).toEqual(discontinuation.slice().sort());
    const causeMembers = causes.flatMap((g) => g.members);
    expect(causeMembers.slice().sort()).toEqual(discontinuation.slice().sort());
  });

  it("sums member probabilities from the recorded prediction", () => {
    const probs = fx.predictFull.probabilities;
    const groups = groupRisks(probs);
    for (const group of RISK_GROUPS) {
      const expected = group.members.reduce((total, member) => total + probs[member], 0);
      const actual = groups.find((g) => g.name === group.name)?.value;
      expect(actual).toBe(expected);
    }
  });

  it("any_reason equals one minus continue for a full distribution", () => {
    const probs = fx.predictFull.probabilities;
    const anyReason = groupRisks(probs).find((g) => g.name === "any_reason")?.value ?? NaN;
    expect(anyReason).toBeCloseTo(1 - probs.continue, 12);
  });

  it("treats missing classes as zero", () => {
    const groups = groupRisks({ lack_of_efficacy: 0.25 });
    expect(groups.find((g) => g.name === "any_reason")?.value).toBe(0.25);
    expect(groups.find((g) => g.name === "other_reasons")?.value).toBe(0);
  });
});
