"""Monte-Carlo wavefunction simulation of a driven atom coupled to one trap mode.

The state lives in (internal levels) x (Fock states 0..n_max), indexed as
``level * (n_max + 1) + n``. Between jumps it evolves under the non-Hermitian
effective Hamiltonian, expanded to first order in the Lamb-Dicke factor, with
the exact propagator ``expm(-i H_eff dt)``. A jump happens when the squared
norm falls below a uniform random threshold; the crossing is located by
bisecting the step with cached sub-step propagators.

Per-trajectory generators are seeded by ``SeedSequence([seed, index])``, so a
trajectory's random stream depends only on the base seed and its index.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .core import ConfigError, LevelScheme, NumericalError, TrapMode
from .ratecool import PhononDistribution, thermal_distribution

TOP_POPULATION_TOL = 1e-4
MAX_STEP_JUMP_PROB = 0.1
MAX_HALVINGS = 4
BISECTION_DEPTH = 10
BATCH = 64


class TrajectoryError(NumericalError):
    def __init__(self, message, seed_index=None):
        super().__init__(message if seed_index is None else f"trajectory {seed_index}: {message}")
        self.seed_index = seed_index


@dataclass(frozen=True)
class TrajectoryConfig:
    scheme: LevelScheme
    mode: TrapMode
    n_max: int
    t_final: float  # us
    dt: float  # us
    seed: int = 0
    initial_n: float = 0.0
    initial_level: str | None = None
    record_interval: float | None = None  # us; defaults to dt
    emission: str = "isotropic"
    steady_fraction: float = 0.2

    def __post_init__(self):
        if self.n_max < 5 * (1 + self.initial_n):
            raise ConfigError(f"n_max = {self.n_max} must be >= 5 (1 + initial_n) = {5 * (1 + self.initial_n):g}")
        if not (self.dt > 0 and self.t_final > 0):
            raise ConfigError("dt and t_final must be positive")
        if self.emission not in ("isotropic", "none"):
            raise ConfigError(f"unknown emission pattern {self.emission!r}")
        if self.initial_level is not None and self.initial_level not in self.scheme.labels:
            raise ConfigError(f"unknown initial level {self.initial_level!r}")

    @property
    def record_every(self):
        ri = self.record_interval or self.dt
        k = max(1, round(ri / self.dt))
        return k

    def config_hash(self):
        payload = json.dumps(_config_dict(self), sort_keys=True, default=str)
        return hashlib.sha1(payload.encode()).hexdigest()[:12]


def _config_dict(cfg):
    s = cfg.scheme
    return {
        "levels": [(lv.label, lv.energy_offset) for lv in s.levels],
        "couplings": [(c.lower, c.upper, c.rabi, c.detuning, c.axis_cosine) for c in s.couplings],
        "decays": [(d.upper, d.lower, d.rate) for d in s.decays],
        "mode": (cfg.mode.frequency, cfg.mode.lamb_dicke, cfg.mode.recoil_alpha),
        "n_max": cfg.n_max,
        "t_final": cfg.t_final,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "initial_n": cfg.initial_n,
        "initial_level": cfg.initial_level,
        "record_interval": cfg.record_interval,
        "emission": cfg.emission,
    }


def trajectory_rng(seed, index):
    """Generator for trajectory ``index`` of an ensemble with base ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)])))


class _Model:
    """Operators of one configuration in the joint internal x Fock space."""

    def __init__(self, cfg: TrajectoryConfig):
        s, m = cfg.scheme, cfg.mode
        nf = cfg.n_max + 1
        di = s.dim
        self.nf, self.di, self.dim = nf, di, di * nf
        a = np.diag(np.sqrt(np.arange(1, nf)), 1)
        X = a + a.T
        If = np.eye(nf)
        num = np.arange(nf, dtype=float)
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for lab, e in s.frame_energies.items():
            i = s.index(lab)
            H[i * nf : (i + 1) * nf, i * nf : (i + 1) * nf] += e * If
        H += np.kron(np.eye(di), np.diag(num) * m.frequency)
        eta = m.lamb_dicke
        for c in s.couplings:
            li, ui = s.index(c.lower), s.index(c.upper)
            block = (c.rabi / 2) * (If + 1j * eta * c.axis_cosine * X)
            H[ui * nf : (ui + 1) * nf, li * nf : (li + 1) * nf] += block
            H[li * nf : (li + 1) * nf, ui * nf : (ui + 1) * nf] += block.conj().T
        self.channels = []
        for ch in s.decays:
            ui, li = s.index(ch.upper), s.index(ch.lower)
            idx = slice(ui * nf, (ui + 1) * nf)
            H[idx, idx] -= 0.5j * ch.rate * If
            self.channels.append((ch.rate, ui, li))
        self.H = H
        self.X = X
        # spectral form of X for the exact recoil displacement exp(i eta u X)
        self.x_eig, self.x_vec = np.linalg.eigh(X)
        self.eta = eta
        self.num_full = np.tile(num, di)
        self.top_idx = np.array([i * nf + nf - 1 for i in range(di)])

    def propagators(self, dt):
        U0 = expm(-1j * self.H * dt)
        us = [U0]
        for k in range(1, BISECTION_DEPTH + 1):
            us.append(expm(-1j * self.H * dt / 2**k))
        return us

    def jump(self, psi, rng, emission):
        nf = self.nf
        weights = np.array([rate * np.vdot(psi[u * nf : (u + 1) * nf], psi[u * nf : (u + 1) * nf]).real
                            for rate, u, _ in self.channels])
        total = weights.sum()
        if total <= 0:
            raise NumericalError("jump requested from a state with no excited population")
        j = int(rng.choice(len(weights), p=weights / total))
        _, u, l = self.channels[j]
        amp = psi[u * nf : (u + 1) * nf]
        if emission == "isotropic":
            proj = rng.uniform(-1.0, 1.0)
            # unitary kick; the first-order form 1 + i eta u X overheats
            amp = self.x_vec @ (np.exp(1j * self.eta * proj * self.x_eig) * (self.x_vec.T @ amp))
        out = np.zeros_like(psi)
        out[l * nf : (l + 1) * nf] = amp
        return out / np.linalg.norm(out)


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    mean_n: np.ndarray
    n_jumps: int
    seed: int
    index: int
    steady_pn: np.ndarray | None = None
    steady_n: float | None = None
    norms: np.ndarray | None = None
    jump_steps: list = field(default_factory=list)


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_n: np.ndarray
    stderr_n: np.ndarray
    steady_pn: PhononDistribution
    n_trajectories: int
    seed: int
    steady_n: float = math.nan
    steady_stderr: float = math.nan
    steady_pn_stderr: np.ndarray | None = None
    dt: float = math.nan
    n_max: int = 0
    config_hash: str = ""

    def metadata(self):
        return {
            "seed": self.seed,
            "dt_us": self.dt,
            "n_max": self.n_max,
            "n_trajectories": self.n_trajectories,
            "config_hash": self.config_hash,
        }


def _initial_states(model, cfg, rngs):
    nf = model.nf
    level = cfg.scheme.index(cfg.initial_level or cfg.scheme.labels[0])
    # cap the initial draw well below the truncation edge
    cap = max(1, nf - 1 - max(5, nf // 4))
    pn = thermal_distribution(cfg.initial_n, cap).probabilities
    psi = np.zeros((model.dim, len(rngs)), dtype=complex)
    for b, rng in enumerate(rngs):
        n = int(rng.choice(pn.size, p=pn))
        psi[level * nf + n, b] = 1.0
    return psi


def _simulate_batch(cfg: TrajectoryConfig, indices, track_norm=False):
    model = _Model(cfg)
    rngs = [trajectory_rng(cfg.seed, i) for i in indices]
    B = len(indices)
    psi = _initial_states(model, cfg, rngs)
    thresholds = np.array([rng.random() for rng in rngs])
    n_jumps = np.zeros(B, dtype=int)
    jump_steps = [[] for _ in range(B)]

    n_steps = int(math.ceil(cfg.t_final / cfg.dt - 1e-9))
    rec_every = cfg.record_every
    n_rec = n_steps // rec_every + 1
    times = np.arange(n_rec) * rec_every * cfg.dt
    steady_start = int(math.floor((1 - cfg.steady_fraction) * (n_rec - 1)))
    mean_n = np.empty((n_rec, B))
    pn_acc = np.zeros((model.nf, B))
    pn_count = 0
    norms = [] if track_norm else None

    halvings = 0
    sub = 1  # sub-steps per nominal step
    U = model.propagators(cfg.dt)

    def record(r):
        nonlocal pn_count
        w = np.abs(psi) ** 2
        nrm = w.sum(axis=0)
        mean_n[r] = (model.num_full @ w) / nrm
        if r >= steady_start:
            pn_acc[:] += w.reshape(model.di, model.nf, B).sum(axis=0) / nrm
            pn_count += 1

    def segment(col, vec, k, r_thr):
        trial = U[k] @ vec
        if np.vdot(trial, trial).real >= r_thr:
            return trial, r_thr
        if k == BISECTION_DEPTH:
            new = model.jump(trial, rngs[col], cfg.emission)
            n_jumps[col] += 1
            return new, rngs[col].random()
        vec, r_thr = segment(col, vec, k + 1, r_thr)
        return segment(col, vec, k + 1, r_thr)

    record(0)
    for step in range(1, n_steps + 1):
        done = 0.0
        while done < 1.0:
            while True:
                new = U[0] @ psi
                n_old = np.einsum("ij,ij->j", psi.conj(), psi).real
                n_new = np.einsum("ij,ij->j", new.conj(), new).real
                frac = 1 - n_new / n_old
                if frac.max() <= MAX_STEP_JUMP_PROB:
                    break
                halvings += 1
                if halvings > MAX_HALVINGS:
                    raise TrajectoryError(
                        f"per-step jump probability {frac.max():.3g} > {MAX_STEP_JUMP_PROB} "
                        f"after {MAX_HALVINGS} halvings of dt; reduce dt",
                        indices[int(frac.argmax())],
                    )
                sub *= 2
                U = model.propagators(cfg.dt / sub)
            jumpers = np.nonzero(n_new < thresholds)[0]
            for b in jumpers:
                vec, thr = segment(b, psi[:, b], 0, thresholds[b])
                new[:, b] = vec
                thresholds[b] = thr
                jump_steps[b].append(step)
            psi = new
            done += 1.0 / sub
        if track_norm:
            norms.append(np.einsum("ij,ij->j", psi.conj(), psi).real.copy())
        top = (np.abs(psi[model.top_idx]) ** 2).sum(axis=0) / np.einsum("ij,ij->j", psi.conj(), psi).real
        if top.max() > TOP_POPULATION_TOL:
            raise TrajectoryError(
                f"Fock-top population {top.max():.3g} exceeds {TOP_POPULATION_TOL}; increase n_max",
                indices[int(top.argmax())],
            )
        if step % rec_every == 0:
            record(step // rec_every)

    steady_pn = pn_acc / max(pn_count, 1)
    steady_n = mean_n[steady_start:].mean(axis=0)
    return {
        "times": times,
        "mean_n": mean_n,
        "steady_pn": steady_pn,
        "steady_n": steady_n,
        "n_jumps": n_jumps,
        "jump_steps": jump_steps,
        "norms": np.array(norms) if track_norm else None,
        "dt": cfg.dt / sub,
    }


def run_trajectory(config: TrajectoryConfig, index=0, track_norm=False) -> TrajectoryRecord:
    """Simulate trajectory ``index`` of the ensemble defined by ``config``."""
    out = _simulate_batch(config, [index], track_norm=track_norm)
    return TrajectoryRecord(
        times=out["times"],
        mean_n=out["mean_n"][:, 0],
        n_jumps=int(out["n_jumps"][0]),
        seed=config.seed,
        index=index,
        steady_pn=out["steady_pn"][:, 0],
        steady_n=float(out["steady_n"][0]),
        norms=None if out["norms"] is None else out["norms"][:, 0],
        jump_steps=out["jump_steps"][0],
    )


def ensemble_average(config: TrajectoryConfig, n_trajectories, workers=1, batch=BATCH) -> EnsembleResult:
    """Average ``n_trajectories`` independent trajectories.

    Trajectories are propagated in fixed batches of ``batch`` indices, so the
    result does not depend on ``workers``.
    """
    if n_trajectories < 2:
        raise ConfigError("n_trajectories must be >= 2")
    chunks = [list(range(i, min(i + batch, n_trajectories))) for i in range(0, n_trajectories, batch)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(lambda c: _simulate_batch(config, c), chunks))
    else:
        outs = [_simulate_batch(config, c) for c in chunks]
    times = outs[0]["times"]
    mean_n = np.concatenate([o["mean_n"] for o in outs], axis=1)
    pn = np.concatenate([o["steady_pn"] for o in outs], axis=1)
    sn = np.concatenate([o["steady_n"] for o in outs])
    N = n_trajectories
    pn_mean = pn.mean(axis=1)
    return EnsembleResult(
        times=times,
        mean_n=mean_n.mean(axis=1),
        stderr_n=mean_n.std(axis=1, ddof=1) / math.sqrt(N),
        steady_pn=PhononDistribution(pn_mean / pn_mean.sum()),
        n_trajectories=N,
        seed=config.seed,
        steady_n=float(sn.mean()),
        steady_stderr=float(sn.std(ddof=1) / math.sqrt(N)),
        steady_pn_stderr=pn.std(axis=1, ddof=1) / math.sqrt(N),
        dt=min(o["dt"] for o in outs),
        n_max=config.n_max,
        config_hash=config.config_hash(),
    )


def write_ensemble_csv(path, result: EnsembleResult):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us", "mean_n", "stderr_n"])
        for t, m, s in zip(result.times, result.mean_n, result.stderr_n):
            w.writerow([f"{t:.17g}", f"{m:.17g}", f"{s:.17g}"])


def write_distribution_csv(path, dist: PhononDistribution):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "p_n"])
        for n, p in enumerate(dist.probabilities):
            w.writerow([n, f"{p:.17g}"])
