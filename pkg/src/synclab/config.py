"""Trial configuration: which experiment runs, for how long, over which
visibility topology, with which roles and virtual players.

The text form is the administrator's config-file format: UTF-8 key=value
lines followed by a `topology:` block holding the 0/1 visibility matrix.
Serializing and re-parsing a config yields an equal TrialConfig.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import MotionKind, Role, Topology, TrialType, ValidationError, validate_topology
from .dynamics import (ControllerKind, ControllerParams, DynamicsModel,
                       DynamicsParams, VirtualPlayerConfig)

DEFAULT_RECORD_RATE_HZ = 10.0


@dataclass(frozen=True)
class TrialConfig:
    trial_type: TrialType
    duration_s: float
    topology: Topology
    roles: dict[int, Role] = field(default_factory=dict)  # 1-based player index
    vp_configs: dict[int, VirtualPlayerConfig] = field(default_factory=dict)
    record_rate_hz: float = DEFAULT_RECORD_RATE_HZ
    solo_owner: str = "Player"
    solo_kind: MotionKind = MotionKind.FREE

    def __post_init__(self):
        object.__setattr__(self, "trial_type", TrialType(self.trial_type))
        object.__setattr__(self, "solo_kind", MotionKind(self.solo_kind))
        if not self.duration_s > 0:
            raise ValidationError(f"duration must be positive, got {self.duration_s}")
        if not self.record_rate_hz > 0:
            raise ValidationError(f"record rate must be positive, got {self.record_rate_hz}")
        n = self.topology.n_players
        if self.trial_type is TrialType.SOLO and n != 1:
            raise ValidationError("solo trials have exactly 1 player")
        if self.trial_type.is_dyadic and n != 2:
            raise ValidationError("dyadic trials have exactly 2 players")
        indices = set(range(1, n + 1))
        if not set(self.vp_configs) <= indices:
            raise ValidationError(f"vp indices {sorted(set(self.vp_configs) - indices)} "
                                  f"outside 1..{n}")
        if not set(self.roles) <= indices:
            raise ValidationError(f"role indices {sorted(set(self.roles) - indices)} "
                                  f"outside 1..{n}")
        object.__setattr__(self, "roles", {i: Role(r) for i, r in sorted(self.roles.items())})
        object.__setattr__(self, "vp_configs", dict(sorted(self.vp_configs.items())))
        if self.trial_type.is_dyadic:
            lf = [r for r in self.role_map().values() if r in (Role.LEADER, Role.FOLLOWER)]
            if lf.count(Role.LEADER) > 1:
                raise ValidationError("leader-follower dyads admit exactly one leader")

    @property
    def n_players(self) -> int:
        return self.topology.n_players

    def role_map(self) -> dict[int, Role]:
        """Roles for every player index, defaulting to none."""
        return {i: self.roles.get(i, Role.NONE) for i in range(1, self.n_players + 1)}


def _fmt(v: float) -> str:
    return repr(float(v))


def serialize_trial_config(cfg: TrialConfig) -> str:
    lines = [
        f"trial_type={cfg.trial_type.value}",
        f"duration_s={_fmt(cfg.duration_s)}",
        f"record_rate_hz={_fmt(cfg.record_rate_hz)}",
    ]
    if cfg.trial_type is TrialType.SOLO:
        lines.append(f"solo_owner={cfg.solo_owner}")
        lines.append(f"solo_kind={cfg.solo_kind.value}")
    for i, role in cfg.roles.items():
        lines.append(f"role.{i}={role.value}")
    for i, vp in cfg.vp_configs.items():
        d, c = vp.dynamics, vp.controller
        lines.append(f"vp.{i}.model={d.model.value}")
        if d.model is DynamicsModel.HARMONIC:
            lines.append(f"vp.{i}.a={_fmt(d.a)}")
            lines.append(f"vp.{i}.b={_fmt(d.b)}")
        elif d.model is DynamicsModel.HKB:
            lines.append(f"vp.{i}.alpha={_fmt(d.alpha)}")
            lines.append(f"vp.{i}.beta={_fmt(d.beta)}")
            lines.append(f"vp.{i}.gamma={_fmt(d.gamma)}")
            lines.append(f"vp.{i}.omega={_fmt(d.omega)}")
        lines.append(f"vp.{i}.controller={c.controller.value}")
        lines.append(f"vp.{i}.mode={c.mode.value}")
        if c.controller is ControllerKind.PD:
            lines.append(f"vp.{i}.kp={_fmt(c.kp)}")
            lines.append(f"vp.{i}.ksigma={_fmt(c.ksigma)}")
        else:
            lines.append(f"vp.{i}.c={_fmt(c.c)}")
            lines.append(f"vp.{i}.delta={_fmt(c.delta)}")
            lines.append(f"vp.{i}.k={_fmt(c.k)}")
        if vp.signature_ref is not None:
            lines.append(f"vp.{i}.signature={vp.signature_ref}")
    lines.append("topology:")
    lines.append(cfg.topology.to_text())
    return "\n".join(lines) + "\n"


def parse_vp_entries(entries: dict[str, str]) -> VirtualPlayerConfig:
    """Build a VP config from key=value entries (model, controller, mode,
    gains, signature)."""
    dyn_kw = {}
    model = entries.get("model", DynamicsModel.HKB.value)
    for key in ("a", "b", "alpha", "beta", "gamma", "omega"):
        if key in entries:
            dyn_kw[key] = float(entries[key])
    ctl_kw = {}
    for key in ("kp", "ksigma", "c", "delta", "k"):
        if key in entries:
            ctl_kw[key] = float(entries[key])
    controller = entries.get("controller", ControllerKind.PD.value)
    mode = entries.get("mode", Role.FOLLOWER.value)
    try:
        dyn = DynamicsParams(model=DynamicsModel(model), **dyn_kw)
        ctl = ControllerParams(controller=ControllerKind(controller), mode=Role(mode), **ctl_kw)
    except ValueError as exc:
        raise ValidationError(f"bad VP configuration: {exc}") from exc
    return VirtualPlayerConfig(dynamics=dyn, controller=ctl,
                               signature_ref=entries.get("signature"))


def parse_trial_config(text: str) -> TrialConfig:
    kv: dict[str, str] = {}
    topo_lines: list[str] = []
    in_topo = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "topology:":
            in_topo = True
            continue
        if in_topo:
            topo_lines.append(line)
            continue
        if "=" not in line:
            raise ValidationError(f"expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()

    if "trial_type" not in kv:
        raise ValidationError("config is missing trial_type")
    trial_type = TrialType(kv.pop("trial_type"))
    if not topo_lines:
        raise ValidationError("config is missing the topology: block")
    rows = [[int(tok) for tok in line.split()] for line in topo_lines]
    topology = validate_topology(rows, trial_type)

    duration = float(kv.pop("duration_s", "30"))
    rate = float(kv.pop("record_rate_hz", str(DEFAULT_RECORD_RATE_HZ)))
    solo_owner = kv.pop("solo_owner", "Player")
    solo_kind = MotionKind(kv.pop("solo_kind", MotionKind.FREE.value))

    roles: dict[int, Role] = {}
    vp_entries: dict[int, dict[str, str]] = {}
    for key, value in kv.items():
        parts = key.split(".")
        if parts[0] == "role" and len(parts) == 2:
            roles[int(parts[1])] = Role(value)
        elif parts[0] == "vp" and len(parts) == 3:
            vp_entries.setdefault(int(parts[1]), {})[parts[2]] = value
        else:
            raise ValidationError(f"unknown config key {key!r}")

    vps = {i: parse_vp_entries(entries) for i, entries in vp_entries.items()}
    return TrialConfig(trial_type=trial_type, duration_s=duration, topology=topology,
                       roles=roles, vp_configs=vps, record_rate_hz=rate,
                       solo_owner=solo_owner, solo_kind=solo_kind)
