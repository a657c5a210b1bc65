"""Seeded synthetic channel traces for desk-scale testing.

Each link gets an independent stream: a slowly varying log-normal shadowing
process (first-order autoregressive in dB) plus a two-state blocking chain
that holds the link in a deep fade for long stretches, which is the
character of a channel around a body that barely moves. Packet loss marks
samples missing so the full ingestion path (alignment, imputation) can be
exercised end to end.

Generation is a pure function of (spec, link, seed): per-link streams are
keyed by the link label, not declaration order, so edits to a scenario file
never shuffle other links' realizations.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, WbandivError
from .nodes import MEASURABLE_LINKS, LinkKey, link_from_label
from .trace import GAIN_MAX_DB, GAIN_MIN_DB, ChannelTraceSet


@dataclass(frozen=True)
class LinkModel:
    """Per-link generation parameters."""

    mean_gain_db: float = -70.0
    shadow_sigma_db: float = 3.0
    shadow_corr: float = 0.99
    block_enter_prob: float = 0.005
    block_exit_prob: float = 0.05
    block_atten_db: float = 25.0
    loss_prob: float = 0.0

    def validate(self) -> None:
        if not math.isfinite(self.mean_gain_db):
            raise ConfigurationError("mean_gain_db must be finite")
        if self.shadow_sigma_db < 0:
            raise ConfigurationError("shadow_sigma_db must be >= 0")
        if not 0.0 <= self.shadow_corr < 1.0:
            raise ConfigurationError("shadow_corr must lie in [0, 1)")
        if not 0.0 < self.block_enter_prob <= 1.0:
            raise ConfigurationError("block_enter_prob must lie in (0, 1]")
        if not 0.0 < self.block_exit_prob <= 1.0:
            raise ConfigurationError("block_exit_prob must lie in (0, 1]")
        if self.block_atten_db < 0:
            raise ConfigurationError("block_atten_db must be >= 0")
        if not 0.0 <= self.loss_prob < 1.0:
            raise ConfigurationError("loss_prob must lie in [0, 1)")

    @property
    def blocked_fraction(self) -> float:
        """Stationary fraction of time the blocking chain spends blocked."""
        return self.block_enter_prob / (self.block_enter_prob + self.block_exit_prob)


@dataclass(frozen=True)
class ScenarioSpec:
    """A full synthetic scenario: globals plus per-link parameter overrides."""

    n_slots: int
    delta_ms: float = 15.0
    seed: int = 0
    label: str = "synthetic"
    defaults: LinkModel = LinkModel()
    overrides: Mapping[str, LinkModel] = field(default_factory=dict)

    def validate(self) -> None:
        if self.n_slots < 1:
            raise ConfigurationError(f"n_slots must be >= 1, got {self.n_slots}")
        if self.delta_ms <= 0:
            raise ConfigurationError(f"delta_ms must be positive, got {self.delta_ms}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError(f"seed must be a non-negative integer, got {self.seed!r}")
        self.defaults.validate()
        for label, model in self.overrides.items():
            try:
                link_from_label(label)
            except WbandivError as exc:
                raise ConfigurationError(f"bad link label in scenario: {exc}") from None
            model.validate()

    def link_model(self, link: LinkKey) -> LinkModel:
        return self.overrides.get(link.label, self.defaults)


# -- scenario file I/O --------------------------------------------------------

_MODEL_FIELDS = tuple(f.name for f in fields(LinkModel))
_GLOBAL_FIELDS = ("n_slots", "delta_ms", "seed", "label")


def _model_from_dict(data: dict, base: LinkModel) -> LinkModel:
    unknown = set(data) - set(_MODEL_FIELDS)
    if unknown:
        raise ConfigurationError(f"unknown link parameter(s): {sorted(unknown)}")
    return replace(base, **data)


def scenario_from_dict(data: dict) -> ScenarioSpec:
    unknown = set(data) - set(_GLOBAL_FIELDS) - {"defaults", "links"}
    if unknown:
        raise ConfigurationError(f"unknown scenario key(s): {sorted(unknown)}")
    if "n_slots" not in data:
        raise ConfigurationError("scenario needs n_slots")
    defaults = _model_from_dict(data.get("defaults", {}), LinkModel())
    overrides = {}
    for label, entry in data.get("links", {}).items():
        try:
            link = link_from_label(label)
        except WbandivError as exc:
            raise ConfigurationError(f"bad link label in scenario: {exc}") from None
        overrides[link.label] = _model_from_dict(entry, defaults)
    spec = ScenarioSpec(
        n_slots=int(data["n_slots"]),
        delta_ms=float(data.get("delta_ms", 15.0)),
        seed=int(data.get("seed", 0)),
        label=str(data.get("label", "synthetic")),
        defaults=defaults,
        overrides=overrides,
    )
    spec.validate()
    return spec


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "n_slots": spec.n_slots,
        "delta_ms": spec.delta_ms,
        "seed": spec.seed,
        "label": spec.label,
        "defaults": asdict(spec.defaults),
        "links": {label: asdict(model) for label, model in sorted(spec.overrides.items())},
    }


def load_scenario(path: Path) -> ScenarioSpec:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"scenario file {path} must hold a JSON object")
    return scenario_from_dict(data)


def save_scenario(spec: ScenarioSpec, path: Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(spec), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# -- generation ----------------------------------------------------------------


def _link_rng(seed: int, link: LinkKey) -> np.random.Generator:
    # label-keyed substream: stable under scenario edits and link ordering
    digest = hashlib.sha256(link.label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *words]))


def _blocking_chain(initial: bool, u: np.ndarray, enter: float, exit_: float) -> np.ndarray:
    blocked = np.empty(len(u), dtype=bool)
    state = initial
    for t, ut in enumerate(u.tolist()):
        state = (ut >= exit_) if state else (ut < enter)
        blocked[t] = state
    return blocked


def _ar_shadow(z: np.ndarray, sigma: float, corr: float) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(len(z))
    if corr == 0.0:
        return sigma * z
    out = np.empty(len(z))
    innov = sigma * math.sqrt(1.0 - corr * corr)
    s = 0.0
    for t, zt in enumerate(z.tolist()):
        # stationary start: the first sample already has deviation sigma
        s = sigma * zt if t == 0 else corr * s + innov * zt
        out[t] = s
    return out


def generate_link(spec: ScenarioSpec, link: LinkKey, seed: int | None = None) -> np.ndarray:
    """One link's gain series; NaN marks samples lost to packet loss.

    Identical (spec, link, seed) always yields an identical array. Gains are
    clamped to the valid measurement range so emitted record CSVs always
    re-ingest cleanly.
    """
    spec.validate()
    model = spec.link_model(link)
    rng = _link_rng(spec.seed if seed is None else seed, link)
    n = spec.n_slots
    # fixed draw order is part of the determinism contract
    init_blocked = bool(rng.random() < model.blocked_fraction)
    u_block = rng.random(n)
    z = rng.standard_normal(n)
    u_loss = rng.random(n)
    blocked = _blocking_chain(init_blocked, u_block, model.block_enter_prob, model.block_exit_prob)
    gains = model.mean_gain_db + _ar_shadow(z, model.shadow_sigma_db, model.shadow_corr)
    gains = gains - model.block_atten_db * blocked
    np.clip(gains, GAIN_MIN_DB, GAIN_MAX_DB, out=gains)
    gains[u_loss < model.loss_prob] = np.nan
    return gains


def generate_scenario(spec: ScenarioSpec, seed: int | None = None) -> ChannelTraceSet:
    """Generate every measurable link of the topology (still unimputed)."""
    spec.validate()
    traces = {link: generate_link(spec, link, seed) for link in MEASURABLE_LINKS}
    return ChannelTraceSet(spec.delta_ms, traces, spec.n_slots, subject=spec.label)
