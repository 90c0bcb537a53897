"""Network geometry and long-term channel statistics.

A :class:`Scenario` bundles everything the solvers need: per-link spatial
correlation matrices (the long-term CSI), noise variances, SINR targets and
the generating geometry.  Correlation matrices combine a uniform-linear-array
response under a small Gaussian angular spread with a power-law path loss.
Scenarios serialize to a versioned JSON schema that round-trips bit-exactly.
"""

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hermlin import as_hermitian

__all__ = [
    "LayoutSpec",
    "Scenario",
    "ScenarioFormatError",
    "apply_pathloss",
    "bs_positions",
    "build_correlation",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
    "scenario_digest",
    "scenario_to_dict",
    "scenario_from_dict",
    "validate_scenario",
    "with_gamma",
]

SCHEMA_VERSION = 1

# Users land uniformly on a disc of half the BS spacing around their BS,
# outside a small guard radius that keeps the power law finite.
GUARD_RADIUS = 35.0

# Numerical floor for the "more than one nonzero eigenvalue" check; users
# sitting almost exactly on the array axis give a second eigenvalue that is
# tiny but still positive.
RANK2_TOL = 1e-13

_LAYOUT_CELLS = {"two-cell-line": 2, "square-corners": 4, "hexagonal-7": 7}


class ScenarioFormatError(ValueError):
    """Scenario file violates the schema or the model invariants."""


@dataclass(frozen=True)
class LayoutSpec:
    """Cell layout and propagation constants used to synthesize scenarios."""

    kind: str = "two-cell-line"
    spacing: float = 2000.0  # distance between neighboring BSs
    pathloss_exp: float = -3.0
    angular_spread: float = math.radians(2.0)

    def __post_init__(self):
        if self.kind not in _LAYOUT_CELLS:
            raise ValueError(f"unknown layout kind {self.kind!r}; expected one of {sorted(_LAYOUT_CELLS)}")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.pathloss_exp >= 0:
            raise ValueError("pathloss exponent must be negative")

    @property
    def cells(self):
        return _LAYOUT_CELLS[self.kind]


def bs_positions(layout):
    """BS coordinates for a layout, one row per cell."""
    d = layout.spacing
    if layout.kind == "two-cell-line":
        pos = [(0.0, 0.0), (d, 0.0)]
    elif layout.kind == "square-corners":
        pos = [(0.0, 0.0), (d, 0.0), (d, d), (0.0, d)]
    else:  # hexagonal-7: central cell plus six at distance d
        pos = [(0.0, 0.0)]
        for k in range(6):
            ang = k * math.pi / 3.0
            pos.append((d * math.cos(ang), d * math.sin(ang)))
    return np.asarray(pos, dtype=float)


@dataclass(eq=False)
class Scenario:
    """A multi-cell network instance with long-term CSI.

    ``R[m, n, i]`` is the N x N spatial correlation of the link from BS m to
    user i of cell n (linear power gain).  Users are indexed flat as
    ``u = n * K + i`` wherever vectors over all users appear.
    """

    M: int
    K: int
    N: int
    R: np.ndarray  # (M, M, K, N, N) complex128
    sigma2: np.ndarray  # (M, K) noise variance, W
    gamma: np.ndarray  # (M, K) SINR target, linear
    bs_pos: np.ndarray = field(default=None)  # (M, 2)
    user_pos: np.ndarray = field(default=None)  # (M, K, 2)
    layout: LayoutSpec = None
    seed: int = None

    def __post_init__(self):
        self.R = np.ascontiguousarray(self.R, dtype=np.complex128)
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float)
        if self.bs_pos is not None:
            self.bs_pos = np.asarray(self.bs_pos, dtype=float)
        if self.user_pos is not None:
            self.user_pos = np.asarray(self.user_pos, dtype=float)

    @property
    def n_users(self):
        return self.M * self.K

    def user_index(self, m, i):
        return m * self.K + i

    def user_label(self, u):
        return divmod(u, self.K)

    @property
    def flat_gamma(self):
        return self.gamma.reshape(-1)

    @property
    def flat_sigma2(self):
        return self.sigma2.reshape(-1)

    def own_link(self, m, i):
        """Correlation of the desired link of user (m, i)."""
        return self.R[m, m, i]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        if (self.M, self.K, self.N, self.seed) != (other.M, other.K, other.N, other.seed):
            return False
        if self.layout != other.layout:
            return False
        for mine, theirs in ((self.R, other.R), (self.sigma2, other.sigma2),
                             (self.gamma, other.gamma), (self.bs_pos, other.bs_pos),
                             (self.user_pos, other.user_pos)):
            if (mine is None) != (theirs is None):
                return False
            if mine is not None and not np.array_equal(mine, theirs):
                return False
        return True


def build_correlation(theta, sigma_theta, n):
    """ULA spatial correlation for a user at angle ``theta`` off broadside.

    Entry (k, l) is exp(j*pi*(k-l)*sin(theta)) damped by the Gaussian
    angular-spread factor exp(-((pi*(k-l)*sigma_theta*cos(theta))**2)/2).
    The result is Hermitian Toeplitz with unit diagonal; any round-off
    negative eigenvalues are clipped to zero.
    """
    if n < 2:
        raise ValueError("need at least two antennas")
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    phase = np.exp(1j * np.pi * lag * math.sin(theta))
    spread = np.exp(-0.5 * (np.pi * lag * sigma_theta * math.cos(theta)) ** 2)
    r = phase * spread
    vals = np.linalg.eigvalsh(r)
    if vals[0] < 0:
        vals, vecs = np.linalg.eigh(r)
        r = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
        r = 0.5 * (r + r.conj().T)
    return r


def apply_pathloss(rbar, d, chi):
    """Scale a correlation matrix by the power law d**chi."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return float(d) ** chi * np.asarray(rbar, dtype=np.complex128)


def _broadside_angles(bs):
    """Per-BS array orientation: facing outward from the network centroid."""
    centroid = bs.mean(axis=0)
    angles = np.zeros(len(bs))
    for m, p in enumerate(bs):
        v = p - centroid
        if np.hypot(*v) > 1e-9:
            angles[m] = math.atan2(v[1], v[0])
    return angles


def generate_scenario(layout, M, K, N, gamma_target, sigma2, seed, guard_radius=GUARD_RADIUS):
    """Draw a random scenario: geometry, then correlation matrices.

    Users are placed uniformly on a disc of radius spacing/2 around their BS
    (outside ``guard_radius``); every correlation matrix is the array
    response at the user's bearing from the respective BS, scaled by the
    power-law path loss of that distance.  Identical seeds reproduce the
    scenario exactly.
    """
    if M != layout.cells:
        raise ValueError(f"layout {layout.kind!r} has {layout.cells} cells, got M={M}")
    if K < 1 or N < 1:
        raise ValueError("K and N must be at least 1")
    if gamma_target <= 0 or sigma2 <= 0:
        raise ValueError("gamma_target and sigma2 must be positive")

    rng = np.random.default_rng(seed)
    bs = bs_positions(layout)
    broadside = _broadside_angles(bs)
    radius = layout.spacing / 2.0
    if not 0 <= guard_radius < radius:
        raise ValueError("guard radius must lie inside the cell disc")

    user_pos = np.empty((M, K, 2))
    for m in range(M):
        for i in range(K):
            r = math.sqrt(rng.uniform(guard_radius ** 2, radius ** 2))
            phi = rng.uniform(0.0, 2.0 * math.pi)
            user_pos[m, i] = bs[m] + (r * math.cos(phi), r * math.sin(phi))

    R = np.empty((M, M, K, N, N), dtype=np.complex128)
    for n in range(M):  # transmitting BS
        for m in range(M):  # cell of the receiving user
            for i in range(K):
                vec = user_pos[m, i] - bs[n]
                dist = math.hypot(*vec)
                theta = math.atan2(vec[1], vec[0]) - broadside[n]
                rbar = build_correlation(theta, layout.angular_spread, N)
                R[n, m, i] = apply_pathloss(rbar, dist, layout.pathloss_exp)

    return Scenario(
        M=M, K=K, N=N, R=R,
        sigma2=np.full((M, K), float(sigma2)),
        gamma=np.full((M, K), float(gamma_target)),
        bs_pos=bs, user_pos=user_pos, layout=layout, seed=seed,
    )


def validate_scenario(s, rank_tol=RANK2_TOL):
    """Check the model invariants; raise ScenarioFormatError on violation."""
    if s.M < 1 or s.K < 1 or s.N < 1:
        raise ScenarioFormatError("M, K, N must be positive")
    if s.R.shape != (s.M, s.M, s.K, s.N, s.N):
        raise ScenarioFormatError(f"R has shape {s.R.shape}, expected {(s.M, s.M, s.K, s.N, s.N)}")
    for name, arr, shape in (("sigma2", s.sigma2, (s.M, s.K)), ("gamma", s.gamma, (s.M, s.K))):
        if arr.shape != shape:
            raise ScenarioFormatError(f"{name} has shape {arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)) or (arr <= 0).any():
            raise ScenarioFormatError(f"{name} entries must be finite and positive")
    if not np.all(np.isfinite(s.R.view(float))):
        raise ScenarioFormatError("R contains non-finite entries")
    for n in range(s.M):
        for m in range(s.M):
            for i in range(s.K):
                r = s.R[n, m, i]
                try:
                    as_hermitian(r)
                except ValueError as exc:
                    raise ScenarioFormatError(f"R[{n},{m},{i}] is not Hermitian: {exc}") from exc
                vals = np.linalg.eigvalsh(r)
                top = float(vals[-1])
                if top <= 0:
                    raise ScenarioFormatError(f"R[{n},{m},{i}] is not a nonzero PSD matrix")
                if float(vals[0]) < -1e-10 * top:
                    raise ScenarioFormatError(
                        f"R[{n},{m},{i}] is not PSD (min eigenvalue {vals[0]:.3e})"
                    )
                if float(vals[-2]) <= rank_tol * top:
                    raise ScenarioFormatError(
                        f"R[{n},{m},{i}] must have more than one nonzero eigenvalue"
                    )
    return s


def _complex_to_pairs(arr):
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(data, shape):
    arr = np.asarray(data, dtype=float)
    if arr.shape != shape + (2,):
        raise ScenarioFormatError(f"R block has shape {arr.shape}, expected {shape + (2,)}")
    return arr[..., 0] + 1j * arr[..., 1]


def scenario_to_dict(s):
    doc = {
        "version": SCHEMA_VERSION,
        "M": s.M,
        "K": s.K,
        "N": s.N,
        "seed": s.seed,
        "layout": None if s.layout is None else {
            "kind": s.layout.kind,
            "spacing": s.layout.spacing,
            "pathloss_exp": s.layout.pathloss_exp,
            "angular_spread": s.layout.angular_spread,
        },
        "gamma": s.gamma.tolist(),
        "sigma2": s.sigma2.tolist(),
        "geometry": {
            "bs": None if s.bs_pos is None else s.bs_pos.tolist(),
            "users": None if s.user_pos is None else s.user_pos.tolist(),
        },
        "R": _complex_to_pairs(s.R),
    }
    return doc


def scenario_from_dict(doc):
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise ScenarioFormatError(f"unsupported scenario schema version {version!r}")
    required = ["M", "K", "N", "gamma", "sigma2", "R"]
    missing = [k for k in required if k not in doc]
    if missing:
        raise ScenarioFormatError(f"scenario document is missing fields: {missing}")
    try:
        M, K, N = int(doc["M"]), int(doc["K"]), int(doc["N"])
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"M, K, N must be integers: {exc}") from exc
    layout = None
    if doc.get("layout") is not None:
        ld = doc["layout"]
        try:
            layout = LayoutSpec(
                kind=ld["kind"], spacing=ld["spacing"],
                pathloss_exp=ld["pathloss_exp"], angular_spread=ld["angular_spread"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"bad layout block: {exc}") from exc
    geometry = doc.get("geometry") or {}
    bs = geometry.get("bs")
    users = geometry.get("users")
    s = Scenario(
        M=M, K=K, N=N,
        R=_pairs_to_complex(doc["R"], (M, M, K, N, N)),
        sigma2=np.asarray(doc["sigma2"], dtype=float),
        gamma=np.asarray(doc["gamma"], dtype=float),
        bs_pos=None if bs is None else np.asarray(bs, dtype=float),
        user_pos=None if users is None else np.asarray(users, dtype=float),
        layout=layout,
        seed=doc.get("seed"),
    )
    return validate_scenario(s)


def save_scenario(s, path):
    """Write a scenario to versioned JSON (exact float round-trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(s), fh)
        fh.write("\n")


def load_scenario(path):
    """Load and strictly validate a scenario JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_digest(s):
    """Stable content hash of a scenario (for run manifests)."""
    import hashlib

    blob = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def with_gamma(s, gamma_target):
    """Same geometry and CSI, different uniform SINR target."""
    return replace(s, gamma=np.full((s.M, s.K), float(gamma_target)))
