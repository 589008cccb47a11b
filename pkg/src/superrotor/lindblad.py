"""Rotor density matrices and their dissipative propagation.

The master equation is d rho/dt = -i[H + H_g, rho]/hbar + D rho, where H is the
rigid-rotor Hamiltonian, H_g the gas-induced energy shift, and D a Lindblad
dissipator built from forward scattering amplitudes.  Every jump operator is
block diagonal over j, so block populations are conserved exactly and the
dynamics factorizes into (j, j') sectors.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import scattering
from .mathkit import make_rule
from .params import HBAR
from .rates import energy_shift_matrix

# angular second moments of the five coupling geometry factors:
# P2(n_z), n_z n_+, n_z n_-, n_+^2, n_-^2 paired with their conjugates.
# Cross moments vanish by azimuthal charge, so the circle-averaged coupling
# contributes one Lindblad channel per template.
TEMPLATE_MOMENTS = (
    4.0 * math.pi / 5.0,
    8.0 * math.pi / 15.0,
    8.0 * math.pi / 15.0,
    32.0 * math.pi / 15.0,
    32.0 * math.pi / 15.0,
)

DIAG_INTERVAL = 50
TRACE_TOL = 1e-8
HERM_TOL = 1e-10
EIG_FLOOR = -1e-9


class StepSizeViolation(ValueError):
    """dt does not resolve the fastest coherent frequency."""


class NumericalDriftError(RuntimeError):
    """Trace, hermiticity, or positivity drifted past tolerance mid-run."""


@dataclass(frozen=True)
class BasisLayout:
    """Contiguous block basis |jm>, j in [j_min, j_max], m in [-j, j]."""

    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_min < 0 or self.j_max < self.j_min:
            raise ValueError("need 0 <= j_min <= j_max")

    @property
    def js(self):
        return range(self.j_min, self.j_max + 1)

    @property
    def dim(self):
        return (self.j_max + 1) ** 2 - self.j_min**2

    def block_dim(self, j):
        self._check(j)
        return 2 * j + 1

    def offset(self, j):
        self._check(j)
        return j**2 - self.j_min**2

    def block_slice(self, j):
        off = self.offset(j)
        return slice(off, off + 2 * j + 1)

    def index(self, j, m):
        if abs(m) > j:
            raise ValueError("|m| > j")
        return self.offset(j) + m + j

    def blocks(self):
        for j in self.js:
            yield j, self.block_slice(j)

    def _check(self, j):
        if not self.j_min <= j <= self.j_max:
            raise ValueError("j=%d outside layout [%d, %d]" % (j, self.j_min, self.j_max))


@dataclass(frozen=True, eq=False)
class RotorState:
    """Immutable density-matrix snapshot on a BasisLayout."""

    layout: BasisLayout
    matrix: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex, order="C")
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError("matrix shape %s does not match dimension %d" % (mat.shape, d))
        scale = max(1.0, float(np.max(np.abs(mat))))
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12 * scale:
            raise ValueError("matrix is not hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-10 or abs(np.trace(mat).imag) > 1e-10:
            raise ValueError("trace deviates from 1 beyond 1e-10")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    def purity(self):
        return float(np.sum(np.abs(self.matrix) ** 2))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def block_populations(self):
        return {j: float(np.trace(self.matrix[sl, sl]).real) for j, sl in self.layout.blocks()}

    def corner_coherence(self, j, j_prime):
        """Matrix element <jj| rho |j'j'> between stretched states."""
        return complex(self.matrix[self.layout.index(j, j), self.layout.index(j_prime, j_prime)])


def isotropic_state(layout, populations, time=0.0):
    """Diagonal state with population p_j spread evenly over each block."""
    for j in populations:
        layout._check(j)
    total = math.fsum(float(p) for p in populations.values())
    if any(float(p) < 0 for p in populations.values()):
        raise ValueError("populations must be nonnegative")
    if abs(total - 1.0) > 1e-10:
        raise ValueError("populations must sum to 1 within 1e-10")
    mat = np.zeros((layout.dim, layout.dim), dtype=complex)
    for j, p in populations.items():
        sl = layout.block_slice(j)
        mat[sl, sl] = np.eye(2 * j + 1) * (float(p) / (2 * j + 1))
    return RotorState(layout, mat, time)


def centrifuge_state(layout, coefficients, time=0.0):
    """Pure superposition of stretched states |jj> with amplitudes c_j."""
    norm = math.fsum(abs(complex(c)) ** 2 for c in coefficients.values())
    if abs(norm - 1.0) > 1e-10:
        raise ValueError("coefficient norm deviates from 1 beyond 1e-10")
    vec = np.zeros(layout.dim, dtype=complex)
    for j, c in coefficients.items():
        vec[layout.index(j, j)] = complex(c)
    return RotorState(layout, np.outer(vec, vec.conj()), time)


def gaussian_profile(layout, center, width):
    """Illustrative Gaussian-over-j amplitude profile for centrifuge_state.

    Not derived from any collision model; it just provides a smooth default
    population of stretched-state coherences across the layout.
    """
    if width <= 0:
        raise ValueError("width must be positive")
    js = np.array(list(layout.js), dtype=float)
    amp = np.exp(-((js - center) ** 2) / (4.0 * width**2))
    amp /= math.sqrt(float(np.sum(amp**2)))
    return {j: complex(a) for j, a in zip(layout.js, amp)}


def _pad_blocks(blocks, d_max):
    out = np.zeros((len(blocks), d_max, d_max), dtype=complex)
    for i, b in enumerate(blocks):
        d = b.shape[0]
        out[i, :d, :d] = b
    return out


def _pack(dense, layout, d_max):
    js = list(layout.js)
    packed = np.zeros((len(js), len(js), d_max, d_max), dtype=complex)
    for a, j in enumerate(js):
        for b, k in enumerate(js):
            blk = dense[layout.block_slice(j), layout.block_slice(k)]
            packed[a, b, : blk.shape[0], : blk.shape[1]] = blk
    return packed


def _unpack(packed, layout):
    dense = np.zeros((layout.dim, layout.dim), dtype=complex)
    js = list(layout.js)
    for a, j in enumerate(js):
        for b, k in enumerate(js):
            dense[layout.block_slice(j), layout.block_slice(k)] = packed[
                a, b, : 2 * j + 1, : 2 * k + 1
            ]
    return dense


@dataclass
class DissipatorSet:
    """Quadrature-discretized Lindblad jump family with block-diagonal jumps.

    The continuous (q, n') family is sampled on product quadrature grids; each
    sample is a valid jump operator, so the discretization itself generates a
    completely positive flow.  jump_pairs() yields the literal (weight, L)
    pairs; apply() evaluates the induced map through an algebraically reduced
    path in which the scalar part of every jump cancels exactly.
    """

    layout: BasisLayout
    backend: str
    collision_weight: float
    aniso_scale: float
    kmat: np.ndarray  # (n_blocks, d_max, d_max), anticommutator kernel
    templates: np.ndarray = None  # (5, n_blocks, d_max, d_max) for linearized
    node_aniso: np.ndarray = None  # (n_nodes, n_blocks, d_max, d_max) for spectral
    sphere_nodes: np.ndarray = None
    sphere_weights: np.ndarray = None
    q_nodes: np.ndarray = None
    q_sqweights: np.ndarray = None  # radial weight per node, |c|^2 excluded
    c_values: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    @property
    def converged(self):
        return bool(self.metadata.get("converged", True))

    @property
    def d_max(self):
        return 2 * self.layout.j_max + 1

    @property
    def n_jumps(self):
        if self.q_nodes is None:
            return 0
        return len(self.q_nodes) * len(self.sphere_weights)

    @property
    def jump_scale(self):
        """Total collision weight; normalizes stationarity and null checks."""
        return max(self.collision_weight, 1e-300)

    @classmethod
    def empty(cls, layout):
        d_max = 2 * layout.j_max + 1
        n = layout.j_max - layout.j_min + 1
        return cls(
            layout=layout,
            backend="none",
            collision_weight=0.0,
            aniso_scale=0.0,
            kmat=np.zeros((n, d_max, d_max), dtype=complex),
            templates=np.zeros((5, n, d_max, d_max), dtype=complex),
            metadata={"converged": True},
        )

    def _node_matrix(self, k):
        """Full forward shape matrix (identity included) at sphere node k."""
        if self.node_aniso is not None:
            blocks = []
            for i, j in enumerate(self.layout.js):
                d = 2 * j + 1
                blocks.append(np.eye(d) + self.node_aniso[k, i, :d, :d])
            return blocks
        g = scattering.geometry_factors(self.sphere_nodes[k])
        blocks = []
        for i, j in enumerate(self.layout.js):
            d = 2 * j + 1
            bbar = np.zeros((d, d), dtype=complex)
            for a in range(5):
                bbar += g[a] * self.templates[a, i, :d, :d]
            blocks.append(np.eye(d) + 0.4 * bbar)
        return blocks

    def jump_pairs(self):
        """Yield the literal (weight, jump matrix) pairs, deterministic order.

        Materializes one dense D x D matrix at a time; intended for audits and
        small layouts, not for the propagation hot path.
        """
        if self.n_jumps == 0:
            return
        pref = 2.0 * math.pi * self.metadata["density_over_mu"]
        for k in range(len(self.sphere_weights)):
            shape = self._node_matrix(k)
            dense_shape = scipy.linalg.block_diag(*shape)
            for i in range(len(self.q_nodes)):
                w = pref * self.q_sqweights[i] * self.sphere_weights[k]
                yield w, self.c_values[i] * dense_shape

    def apply(self, packed):
        """Dissipator action on a packed (n_j, n_j, d, d) block array."""
        acc = np.zeros_like(packed)
        if self.templates is not None and self.node_aniso is None:
            for a in range(5):
                left = self.templates[a][:, None]
                right = self.templates[a].conj().transpose(0, 2, 1)[None, :]
                acc += TEMPLATE_MOMENTS[a] * (left @ packed @ right)
        elif self.node_aniso is not None:
            for k in range(len(self.sphere_weights)):
                blk = self.node_aniso[k]
                acc += self.sphere_weights[k] * (blk[:, None] @ packed @ blk[None, :])
        half_k = 0.5 * (self.kmat[:, None] @ packed + packed @ self.kmat[None, :])
        return (self.aniso_scale * self.collision_weight) * (acc - half_k)


def _radial_samples(spec):
    num = spec.numerics
    q_th = spec.thermal.thermal_momentum
    rule = make_rule("half_line", num.quad_order_q)
    x = rule.nodes
    q = q_th * x
    sqw = (q_th / math.pi**1.5) * rule.weights * x**3
    c = np.array([scattering.forward_scalar(float(qi), spec) for qi in q])
    return q, sqw, c


def _spectral_anisotropy(spec, layout, sphere, kappa_mode):
    q_ref = spec.thermal.thermal_momentum
    c_ref = scattering.forward_scalar(q_ref, spec)
    d_max = 2 * layout.j_max + 1
    n_blocks = layout.j_max - layout.j_min + 1
    aniso = np.zeros((len(sphere.weights), n_blocks, d_max, d_max), dtype=complex)
    for k, n in enumerate(sphere.nodes):
        for i, j in enumerate(layout.js):
            amp = scattering.forward_amplitude_spectral(j, q_ref, n, spec, kappa_mode=kappa_mode)
            shape = amp.entries / c_ref - np.eye(2 * j + 1)
            shape = 0.5 * (shape + shape.conj().T)
            aniso[k, i, : 2 * j + 1, : 2 * j + 1] = shape
    return aniso


def build_dissipator(spec, layout, backend="linearized", kappa_mode="exact"):
    """Assemble the jump family from forward amplitudes on quadrature grids.

    backend "linearized" reduces the sphere average to five real coupling
    templates (angular moments exact); "spectral" keeps the fractional-power
    amplitude at every sphere node.  The convergence flag compares the induced
    map against one with doubled quadrature orders on a dense test state.
    """
    num = spec.numerics
    if num.quad_order_q < 24:
        raise ValueError("radial quadrature order below documented minimum 24")
    sphere = make_rule("sphere", num.quad_order_sphere)
    if len(sphere.weights) < 26:
        raise ValueError("sphere quadrature below documented minimum of 26 nodes")
    if backend not in ("linearized", "spectral"):
        raise ValueError("unknown backend %r" % backend)

    q, sqw, c = _radial_samples(spec)
    density_over_mu = spec.gas.density / spec.thermal.reduced_mass
    radial = float(np.sum(sqw * np.abs(c) ** 2))
    collision_weight = 2.0 * math.pi * density_over_mu * radial

    d_max = 2 * layout.j_max + 1
    n_blocks = layout.j_max - layout.j_min + 1
    meta = {
        "backend": backend,
        "kappa_mode": kappa_mode,
        "quad_order_q": num.quad_order_q,
        "sphere_nodes": len(sphere.weights),
        "density_over_mu": density_over_mu,
    }

    if backend == "linearized":
        templates = np.zeros((5, n_blocks, d_max, d_max), dtype=complex)
        for i, j in enumerate(layout.js):
            t = scattering.coupling_templates(j, spec.molecule, kappa_mode)
            templates[:, i, : 2 * j + 1, : 2 * j + 1] = t
        kmat = np.zeros((n_blocks, d_max, d_max), dtype=complex)
        for a in range(5):
            kmat += TEMPLATE_MOMENTS[a] * (
                templates[a].conj().transpose(0, 2, 1) @ templates[a]
            )
        dset = DissipatorSet(
            layout=layout,
            backend=backend,
            collision_weight=collision_weight,
            aniso_scale=0.16,
            kmat=kmat,
            templates=templates,
            sphere_nodes=sphere.nodes,
            sphere_weights=sphere.weights,
            q_nodes=q,
            q_sqweights=sqw,
            c_values=c,
            metadata=meta,
        )
        # sphere moments are exact for the template geometry, so doubling the
        # angular order is a no-op; the map scales linearly with the radial
        # integral and the drift reduces to its quadrature error.
        _, sqw2, c2 = _radial_samples(_with_q_order(spec, 2 * num.quad_order_q))
        radial2 = float(np.sum(sqw2 * np.abs(c2) ** 2))
        drift = abs(radial2 / radial - 1.0) if radial > 0 else 0.0
    else:
        aniso = _spectral_anisotropy(spec, layout, sphere, kappa_mode)
        kmat = np.einsum("k,kiab,kibc->iac", sphere.weights, aniso, aniso, optimize=True)
        dset = DissipatorSet(
            layout=layout,
            backend=backend,
            collision_weight=collision_weight,
            aniso_scale=1.0,
            kmat=kmat,
            node_aniso=aniso,
            sphere_nodes=sphere.nodes,
            sphere_weights=sphere.weights,
            q_nodes=q,
            q_sqweights=sqw,
            c_values=c,
            metadata=meta,
        )
        drift = _spectral_drift(spec, layout, dset, kappa_mode)

    meta["order_doubling_drift"] = drift
    meta["converged"] = drift < 1e-3
    return dset


def _with_q_order(spec, order):
    from dataclasses import replace

    return replace(spec, numerics=replace(spec.numerics, quad_order_q=order))


def _spectral_drift(spec, layout, dset, kappa_mode):
    from dataclasses import replace

    num = spec.numerics
    fine_spec = replace(
        spec,
        numerics=replace(
            num,
            quad_order_q=2 * num.quad_order_q,
            quad_order_sphere=2 * num.quad_order_sphere,
        ),
    )
    sphere2 = make_rule("sphere", fine_spec.numerics.quad_order_sphere)
    aniso2 = _spectral_anisotropy(fine_spec, layout, sphere2, kappa_mode)
    kmat2 = np.einsum("k,kiab,kibc->iac", sphere2.weights, aniso2, aniso2, optimize=True)
    _, sqw2, c2 = _radial_samples(fine_spec)
    cw2 = (
        2.0 * math.pi * dset.metadata["density_over_mu"] * float(np.sum(sqw2 * np.abs(c2) ** 2))
    )
    fine = DissipatorSet(
        layout=layout,
        backend="spectral",
        collision_weight=cw2,
        aniso_scale=1.0,
        kmat=kmat2,
        node_aniso=aniso2,
        sphere_nodes=sphere2.nodes,
        sphere_weights=sphere2.weights,
        metadata=dict(dset.metadata),
    )
    probe = centrifuge_state(
        layout, gaussian_profile(layout, 0.5 * (layout.j_min + layout.j_max), 2.0)
    )
    packed = _pack(probe.matrix, layout, dset.d_max)
    base = dset.apply(packed)
    ref = fine.apply(packed)
    scale = float(np.max(np.abs(ref)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(ref - base))) / scale


def apply_dissipator(dset, state):
    """Time-derivative contribution D rho as a dense matrix."""
    if state.layout != dset.layout:
        raise ValueError("state layout does not match dissipator layout")
    packed = _pack(state.matrix, state.layout, dset.d_max)
    return _unpack(dset.apply(packed), state.layout)


def _hamiltonian_blocks(spec, layout, backend):
    blocks = []
    for j in layout.js:
        h = np.asarray(energy_shift_matrix(j, spec, backend=backend), dtype=complex)
        h = h + spec.molecule.rotational_energy(j) * np.eye(2 * j + 1)
        blocks.append(h)
    return blocks


def coherent_frequency_spread(spec, layout, backend="linearized"):
    """Width of the spectrum of (H + H_g)/hbar across the layout."""
    eigs = []
    for h in _hamiltonian_blocks(spec, layout, backend):
        eigs.extend(np.linalg.eigvalsh(h))
    return float((max(eigs) - min(eigs)) / HBAR)


def propagate(rho0, dset, spec, t_final, dt, record_every=None):
    """Fixed-step RK4 integration of the master equation.

    Returns snapshots every record_every steps (initial and final state always
    included).  Raises StepSizeViolation if dt fails the resolution bound
    dt * max|Delta| <= 0.1, and NumericalDriftError if trace, hermiticity, or
    positivity drift past tolerance along the run.
    """
    layout = rho0.layout
    if dset is None:
        dset = DissipatorSet.empty(layout)
    if dset.layout != layout:
        raise ValueError("state layout does not match dissipator layout")
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    backend = dset.backend if dset.backend in ("linearized", "spectral") else "linearized"

    h_blocks = _hamiltonian_blocks(spec, layout, backend)
    spread = coherent_frequency_spread(spec, layout, backend)
    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps
    if dt * spread > 0.1 + 1e-12:
        raise StepSizeViolation(
            "step-size violation: dt*max|Delta| = %.3g exceeds 0.1" % (dt * spread)
        )
    if record_every is None:
        record_every = max(1, n_steps // 200)

    d_max = dset.d_max
    hpad = _pad_blocks(h_blocks, d_max)
    # When every Hamiltonian block is a scalar (rigid rotor plus block-scalar
    # gas shift), the coherent rotation commutes with the block-diagonal jumps
    # and factors out of the flow exactly.  RK4 then only sees the slow
    # dissipative motion and the fast phases are applied in closed form.
    scalars = []
    rotating_frame = True
    for h in h_blocks:
        s = complex(np.trace(h)) / h.shape[0]
        if np.max(np.abs(h - s * np.eye(h.shape[0]))) > 1e-12 * max(1.0, np.max(np.abs(h))):
            rotating_frame = False
            break
        scalars.append(s.real)
    if rotating_frame:
        levels = np.array(scalars)
        omega_blocks = (levels[:, None] - levels[None, :]) / HBAR

    def deriv(packed):
        out = dset.apply(packed)
        if not rotating_frame:
            out += (-1j / HBAR) * (hpad[:, None] @ packed - packed @ hpad[None, :])
        return out

    def snapshot(packed, elapsed):
        if rotating_frame:
            phase = np.exp(-1j * omega_blocks * elapsed)[:, :, None, None]
            return _unpack(packed * phase, layout)
        return _unpack(packed, layout)

    packed = _pack(rho0.matrix, layout, d_max)
    traj = [rho0]
    for step in range(1, n_steps + 1):
        k1 = deriv(packed)
        k2 = deriv(packed + (0.5 * dt) * k1)
        k3 = deriv(packed + (0.5 * dt) * k2)
        k4 = deriv(packed + dt * k3)
        packed = packed + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = rho0.time + step * dt
        if step % DIAG_INTERVAL == 0 or step == n_steps:
            _check_drift(snapshot(packed, step * dt), t)
        if step % record_every == 0 or step == n_steps:
            traj.append(RotorState(layout, snapshot(packed, step * dt), t))
    return traj


def _check_drift(dense, t):
    tr = np.trace(dense)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NumericalDriftError("trace drift %.3g at t=%.6g" % (abs(tr - 1.0), t))
    herm = np.max(np.abs(dense - dense.conj().T))
    if herm > HERM_TOL:
        raise NumericalDriftError("hermiticity drift %.3g at t=%.6g" % (herm, t))
    low = np.linalg.eigvalsh(dense)[0]
    if low < EIG_FLOOR:
        raise NumericalDriftError("negative eigenvalue %.3g at t=%.6g" % (low, t))


def evolve_exact(rho0, dset, spec, t_final):
    """Liouvillian exponentiation cross-check; practical only for D <= 60."""
    layout = rho0.layout
    d = layout.dim
    if d > 60:
        raise ValueError("exact path limited to D <= 60 (D = %d)" % d)
    if dset is None:
        dset = DissipatorSet.empty(layout)
    backend = dset.backend if dset.backend in ("linearized", "spectral") else "linearized"
    h = scipy.linalg.block_diag(*_hamiltonian_blocks(spec, layout, backend))
    eye = np.eye(d)
    sup = (-1j / HBAR) * (np.kron(h, eye) - np.kron(eye, h.T))

    cw = dset.aniso_scale * dset.collision_weight
    if cw != 0.0:
        kdense = _block_diag_padded(dset.kmat, layout)
        if dset.node_aniso is not None:
            for k in range(len(dset.sphere_weights)):
                a = _block_diag_padded(dset.node_aniso[k], layout)
                sup += cw * dset.sphere_weights[k] * np.kron(a, a.T)
        else:
            for a in range(5):
                tmpl = _block_diag_padded(dset.templates[a], layout)
                sup += cw * TEMPLATE_MOMENTS[a] * np.kron(tmpl, tmpl.conj())
        sup -= 0.5 * cw * (np.kron(kdense, eye) + np.kron(eye, kdense.T))

    prop = scipy.linalg.expm(sup * t_final)
    vec = prop @ rho0.matrix.reshape(-1)
    return RotorState(layout, vec.reshape(d, d), rho0.time + t_final)


def _block_diag_padded(padded_blocks, layout):
    blocks = [padded_blocks[i, : 2 * j + 1, : 2 * j + 1] for i, j in enumerate(layout.js)]
    return scipy.linalg.block_diag(*blocks)


def alignment_signal(rho, j):
    """Squared coherence |<jj| rho |j-2,j-2>|^2 probed by Raman scattering."""
    if j < 2:
        raise ValueError("alignment signal needs j >= 2")
    rho.layout._check(j)
    rho.layout._check(j - 2)
    return float(abs(rho.corner_coherence(j, j - 2)) ** 2)


def extract_decay_rate(samples, with_residual=False):
    """Log-linear least-squares decay rate of positive samples.

    Meaningful fits need the samples to span about an e-folding; only the
    degenerate preconditions (count, positivity, nonzero time span) are
    enforced so that flat series cleanly report rate 0.
    """
    if len(samples) < 5:
        raise ValueError("need at least 5 samples")
    t = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples], dtype=float)
    if np.any(v <= 0):
        raise ValueError("samples must be positive")
    if t.max() - t.min() <= 0:
        raise ValueError("samples must span a nonzero time interval")
    logs = np.log(v)
    if np.max(logs) - np.min(logs) == 0.0:
        return (0.0, 0.0) if with_residual else 0.0
    slope, intercept = np.polyfit(t, logs, 1)
    resid = float(np.sqrt(np.mean((logs - (slope * t + intercept)) ** 2)))
    rate = float(-slope)
    return (rate, resid) if with_residual else rate


def trajectory_csv(trajectory, signal_js=()):
    """CSV rendering with columns t,trace,purity,min_eig,signal_j<j>..."""
    cols = ["t", "trace", "purity", "min_eig"] + ["signal_j%d" % j for j in signal_js]
    lines = [",".join(cols)]
    for state in trajectory:
        row = [
            state.time,
            float(np.trace(state.matrix).real),
            state.purity(),
            state.min_eigenvalue(),
        ]
        row.extend(alignment_signal(state, j) for j in signal_js)
        lines.append(",".join("%.11e" % x for x in row))
    return "\n".join(lines) + "\n"


def write_state_binary(state, path):
    """Dump a state as little-endian binary.

    Layout: int64 D, int64 j_min, int64 j_max, float64 time, then D*D
    complex128 entries row-major.
    """
    header = np.array(
        [state.layout.dim, state.layout.j_min, state.layout.j_max], dtype="<i8"
    )
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.array([state.time], dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(state.matrix, dtype="<c16").tobytes())


def read_state_binary(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    dim, j_min, j_max = (int(x) for x in np.frombuffer(raw[:24], dtype="<i8"))
    time = float(np.frombuffer(raw[24:32], dtype="<f8")[0])
    layout = BasisLayout(int(j_min), int(j_max))
    if layout.dim != dim:
        raise ValueError("header dimension %d inconsistent with j range" % dim)
    mat = np.frombuffer(raw[32:], dtype="<c16")
    if mat.size != dim * dim:
        raise ValueError("payload size does not match header dimension")
    return RotorState(layout, mat.reshape(dim, dim).copy(), time)