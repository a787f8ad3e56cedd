"""HTTP/JSON prediction service backing the risk-simulator UI.

One classifier and one length regressor are loaded at startup and stay
immutable for the process lifetime; every response is a pure function of
the loaded models and the request.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Query
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .cohort import FEASIBLE_RANGES, BIOLOGICS, SEXES, OutcomeLabel, PatientRecord
from .errors import RangeViolation, UnknownFeature
from .learn import CLASS_NAMES, ModelArtifact, load_model, predict
from .prescribe import (
    optimize_profile,
    profile_features,
    start_profile,
    sweep_feature,
)
from .preprocess import encode

_BOOLEAN_FIELDS = ("psa_diagnosis", "previous_mtx", "concurrent_mtx",
                   "previous_biologic", "repeat_series")


class PatientPayload(BaseModel):
    """One patient in the cohort CSV field vocabulary; optionals nullable."""

    model_config = ConfigDict(extra="forbid")

    age_years: float = Field(ge=0, le=120)
    sex: Literal["male", "female"]
    height_cm: float | None = Field(default=None, gt=0)
    weight_kg: float | None = Field(default=None, gt=0)
    comorbidity_count: int | None = Field(default=None, ge=0)
    age_at_diagnosis: float | None = Field(default=None, ge=0)
    psa_diagnosis: bool
    previous_mtx: bool
    concurrent_mtx: bool | None = None
    previous_biologic: bool
    baseline_dlqi: float | None = Field(default=None, ge=0, le=32)
    baseline_pasi: float | None = Field(default=None, ge=0, le=72)
    biologic: Literal["adalimumab", "etanercept", "infliximab", "ustekinumab"]
    repeat_series: bool
    treatment_length_months: float | None = Field(default=None, ge=0)

    def to_record(self) -> PatientRecord:
        return PatientRecord(
            age_years=self.age_years,
            sex=self.sex,
            height_cm=self.height_cm,
            weight_kg=self.weight_kg,
            comorbidity_count=self.comorbidity_count,
            age_at_diagnosis=self.age_at_diagnosis,
            psa_diagnosis=self.psa_diagnosis,
            previous_mtx=self.previous_mtx,
            concurrent_mtx=self.concurrent_mtx,
            previous_biologic=self.previous_biologic,
            baseline_dlqi=self.baseline_dlqi,
            baseline_pasi=self.baseline_pasi,
            biologic=self.biologic,
            repeat_series=self.repeat_series,
            treatment_length_months=self.treatment_length_months or 0.0,
            outcome=None,
        )


class OptimizeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    min_probability: float = Field(ge=0.0, le=1.0)
    target_class: str = OutcomeLabel.CONTINUE.value
    points: int = Field(default=50, ge=2, le=500)


def _field_error(status: int, loc: list, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"detail": [{"loc": loc, "msg": message}]})


def _feature_descriptor(name: str) -> dict:
    if name in ("sex", "biologic"):
        return {"name": name, "kind": "categorical",
                "levels": list(SEXES if name == "sex" else BIOLOGICS)}
    if name in _BOOLEAN_FIELDS:
        return {"name": name, "kind": "boolean"}
    lo, hi = FEASIBLE_RANGES[name]
    return {"name": name, "kind": "numeric", "lo": lo, "hi": hi}


def build_app(classifier: ModelArtifact, length_model: ModelArtifact,
              static_dir: str | Path | None = None) -> FastAPI:
    """Assemble the service around two immutable model artifacts."""
    app = FastAPI(title="drugsurv risk service")
    needs_length = "retrospective" in (classifier.schema.mode, length_model.schema.mode)
    base_profile = start_profile(classifier.schema)

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request, exc):
        errors = [{"loc": list(e.get("loc", ())), "msg": str(e.get("msg", "")),
                   "type": str(e.get("type", ""))} for e in exc.errors()]
        malformed = any(e["type"] == "json_invalid" for e in errors)
        return JSONResponse(status_code=400 if malformed else 422,
                            content={"detail": errors})

    @app.post("/predict")
    def predict_endpoint(payload: PatientPayload):
        if needs_length and payload.treatment_length_months is None:
            return _field_error(
                422, ["body", "treatment_length_months"],
                "this model uses treatment length as a predictor; value required")
        try:
            record = payload.to_record()
        except RangeViolation as err:
            return _field_error(422, ["body", err.column or "body"], str(err))
        prediction = predict(classifier, encode([record], classifier.schema))
        months = predict(length_model, encode([record], length_model.schema))
        return {
            "probabilities": {
                name: float(p)
                for name, p in zip(CLASS_NAMES, prediction.probabilities[0])},
            "predicted_class": prediction.labels[0],
            "predicted_length_months": float(months[0]),
        }

    @app.post("/optimize")
    def optimize_endpoint(request: OptimizeRequest):
        try:
            result = optimize_profile(
                classifier,
                target_class=request.target_class,
                min_probability=request.min_probability,
                points=request.points)
        except UnknownFeature as err:
            return _field_error(422, ["body", "target_class"], str(err))
        return result.to_json_dict()

    @app.get("/sweep")
    def sweep_endpoint(feature: str = Query(...),
                       points: int = Query(default=50, ge=2, le=500)):
        try:
            values, probs = sweep_feature(
                classifier, None, base_profile, feature, points=points)
        except UnknownFeature as err:
            return _field_error(422, ["query", "feature"], str(err))
        return {"feature": feature, "values": values,
                "probabilities": [[float(p) for p in row] for row in probs]}

    @app.get("/model/meta")
    def meta_endpoint():
        return {
            "kinds": {"classifier": classifier.kind, "length": length_model.kind},
            "classes": list(CLASS_NAMES),
            "schema_fingerprint": classifier.schema_fingerprint,
            "mode": classifier.schema.mode,
            "features": [_feature_descriptor(f)
                         for f in profile_features(classifier.schema)],
            "training_meta": {"classifier": dict(classifier.training_meta),
                              "length": dict(length_model.training_meta)},
            "mae_months": length_model.training_meta.get("mae_months"),
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def run_service(classifier_path: str | Path, length_path: str | Path,
                host: str = "127.0.0.1", port: int = 8000,
                static_dir: str | Path | None = None) -> None:
    """Load both model files and serve until interrupted."""
    import uvicorn

    app = build_app(load_model(classifier_path), load_model(length_path),
                    static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
