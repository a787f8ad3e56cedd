"""Record real service responses into the UI test fixture file.

Fits the default seeded models, runs a fixed request script against the
in-process app, and writes every response (plus the request bodies that
produced them) to tests/fixtures/recorded.json. Rerun after any model or
service change so the UI replay tests keep exercising genuine payloads.
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

import drugsurv as ds
from drugsurv.service import build_app

FIXTURE_PATH = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recorded.json"

PAYLOAD_FULL = {
    "age_years": 45.0,
    "sex": "female",
    "height_cm": 168.0,
    "weight_kg": 82.0,
    "comorbidity_count": 1,
    "age_at_diagnosis": 31.0,
    "psa_diagnosis": False,
    "previous_mtx": True,
    "concurrent_mtx": False,
    "previous_biologic": False,
    "baseline_dlqi": 12.0,
    "baseline_pasi": 14.5,
    "biologic": "adalimumab",
    "repeat_series": False,
    "treatment_length_months": 24.0,
}


def main() -> None:
    records = ds.synthesize_cohort(ds.dermbio_like_spec())
    retro = ds.derive_schema(records, mode="retrospective")
    base = ds.derive_schema(records, mode="baseline")
    classifier = ds.fit_model(ds.encode(records, retro), ds.ModelConfig(kind="glm"))
    length = ds.fit_model(ds.encode(records, base), ds.ModelConfig(kind="length_glm"))
    client = TestClient(build_app(classifier, length))

    unknown_weight = dict(PAYLOAD_FULL, weight_kg=None)
    bad_dlqi = dict(PAYLOAD_FULL, baseline_dlqi=40.0)
    optimize_request = {"min_probability": 0.9, "points": 10}

    recorded = {
        "meta": client.get("/model/meta").json(),
        "payloadFull": PAYLOAD_FULL,
        "predictFull": client.post("/predict", json=PAYLOAD_FULL).json(),
        "payloadUnknownWeight": unknown_weight,
        "predictUnknownWeight": client.post("/predict", json=unknown_weight).json(),
        "sweepWeight": client.get("/sweep", params={"feature": "weight_kg", "points": 25}).json(),
        "sweepBiologic": client.get("/sweep", params={"feature": "biologic"}).json(),
        "optimizeRequest": optimize_request,
        "optimize": client.post("/optimize", json=optimize_request).json(),
        "invalidDlqi": {
            "status": client.post("/predict", json=bad_dlqi).status_code,
            "body": client.post("/predict", json=bad_dlqi).json(),
        },
        "unknownSweepFeature": {
            "status": client.get("/sweep", params={"feature": "shoe_size"}).status_code,
            "body": client.get("/sweep", params={"feature": "shoe_size"}).json(),
        },
    }
    FIXTURE_PATH.write_text(json.dumps(recorded, indent=2) + "\n")
    print(f"wrote {FIXTURE_PATH} ({FIXTURE_PATH.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
