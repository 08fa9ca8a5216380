"""End-to-end construction: base trajectory -> collage QP -> IFSM -> fractal fixed point.

Every run is described by a :class:`RunManifest`, a JSON document that
records all inputs (seed, base method, family, grid, solver and
fixed-point options) together with summary results. Replaying a manifest
regenerates byte-identical output files.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .collage import CollageQp, assemble, assemble_nonoverlapping
from .generators import GaussianStream, KacSiegertBasis, euler_bm, kac_siegert_bm
from .maps import (
    AffineMap,
    as_wavelet,
    family_descriptor,
    is_nonoverlapping,
    parse_family_descriptor,
    wavelet_family,
)
from .operator import IfsmSystem, NotContractiveError, contractivity_factor, fixed_point
from .path import SampledPath, image_cells, l2_distance, read_csv, to_csv_string
from .qp import FeasibleRegion, SolveReport, solve, solve_separable
from .svg import render_svg

MANIFEST_FORMAT = "ifsm-bm-manifest/1"


# diagnostics -----------------------------------------------------------------


@dataclass
class PathDiagnostics:
    """Realized variation of a path at the dyadic meshes 1/n, 2/n, ..., 1."""

    mesh: list
    quadratic_variation: list
    total_variation: list
    max_increment: float

    def to_dict(self) -> dict:
        return asdict(self)


def diagnostics(path: SampledPath) -> PathDiagnostics:
    v = path.values
    mesh, qv, tv = [], [], []
    step = 1
    while step <= path.n:
        d = np.diff(v[::step])
        mesh.append(step / path.n)
        qv.append(float(d @ d))
        tv.append(float(np.abs(d).sum()))
        step *= 2
    return PathDiagnostics(mesh, qv, tv, float(np.abs(np.diff(v)).max()))


@dataclass
class SelfSimilarityReport:
    residual: float
    per_map: list
    bound: float | None = None

    @property
    def ok(self) -> bool:
        return self.bound is None or self.residual <= self.bound


def _preimage_blocks(w: AffineMap, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Image cells of w on grid n and, for each, the first preimage cell (k cells per block)."""
    inv = 1 / abs(w.s)
    if inv.denominator != 1 or n % inv.numerator:
        raise ValueError("map scale must be 1/k with k dividing the grid size")
    k = inv.numerator
    j0, j1 = image_cells(w, n)
    J = np.arange(j0, j1)
    start = (J - j0) * k if w.s > 0 else (j1 - 1 - J) * k
    return J, start


def _residuals(sys: IfsmSystem, fp: SampledPath) -> list[float]:
    cells = fp.cells
    out = []
    for w, a in zip(sys.maps, sys.alpha):
        J, start = _preimage_blocks(w, fp.n)
        k = fp.n // J.size
        means = cells[start[:, None] + np.arange(k)].mean(axis=1)
        r = cells[J] - a * means
        # differences between two image cells compare increments on both sides
        out.append(float(r.max() - r.min()))
    return out


def self_similarity_check(
    sys: IfsmSystem, fp: SampledPath, tol: float | None = None
) -> SelfSimilarityReport:
    """Largest violation of fp(w_i(t+h)) - fp(w_i(t)) = alpha_i (fp(t+h) - fp(t)).

    On the cell grid, fp at a point of the source is read as the mean of fp
    over the cells that w_i maps onto one output cell, so the identity is
    checked for every pair of aligned cells in every map image. The maps
    must be nonoverlapping and tile [0, 1]. With ``tol`` (the fixed-point
    tolerance) the report carries the bound 10*tol/(1 - C).
    """
    rep = is_nonoverlapping(sys.maps)
    if not (rep.nonoverlapping and rep.tiling):
        raise ValueError("self-similarity holds only for nonoverlapping tiling maps")
    per_map = _residuals(sys, fp)
    bound = None
    if tol is not None:
        C = contractivity_factor(sys)
        if C >= 1:
            raise NotContractiveError(f"contractivity factor {C:.6g} >= 1")
        bound = 10.0 * tol / (1.0 - C)
    return SelfSimilarityReport(max(per_map), per_map, bound)


def self_similarity_by_level(sys: IfsmSystem, fp: SampledPath) -> dict[int, float]:
    """Per-level residuals for a wavelet system (diagnostic only when levels overlap)."""
    levels: dict[int, list[int]] = {}
    for k, w in enumerate(sys.maps):
        wi = as_wavelet(w)
        if wi is None:
            raise ValueError("per-level check needs wavelet-type maps")
        levels.setdefault(wi.level, []).append(k)
    out = {}
    for level, idx in sorted(levels.items()):
        sub = sys.subset(idx)
        if is_nonoverlapping(sub.maps).tiling and sub.maps[0].factor * fp.n >= 1:
            out[level] = max(_residuals(sub, fp))
    return out


# options ---------------------------------------------------------------------


@dataclass(frozen=True)
class BaseSpec:
    """How the base trajectory is generated."""

    method: str = "euler"
    n_steps: int = 50
    m_terms: int = 25

    def __post_init__(self):
        if self.method not in ("euler", "kac-siegert"):
            raise ValueError(f"unknown base method {self.method!r}")

    def to_dict(self) -> dict:
        if self.method == "euler":
            return {"method": "euler", "n_steps": self.n_steps}
        return {"method": "kac-siegert", "m_terms": self.m_terms}

    @classmethod
    def from_dict(cls, d: dict) -> "BaseSpec":
        return cls(**d)

    def generate(self, n: int, stream) -> SampledPath:
        if self.method == "euler":
            return euler_bm(self.n_steps, n, stream)
        return kac_siegert_bm(self.m_terms, n, stream, KacSiegertBasis(self.m_terms, n))


@dataclass(frozen=True)
class SolverOptions:
    bound: float = 5.0
    max_contractivity: float | None = 0.999
    kkt_tol: float = 1e-8
    max_iter: int = 10_000

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class FixedPointOptions:
    tol: float = 1e-12
    max_iter: int = 200_000

    def to_dict(self) -> dict:
        return asdict(self)


# fitting ----------------------------------------------------------------------


def fit_ifsm(
    v: SampledPath, maps: Sequence[AffineMap], solver: SolverOptions = SolverOptions()
) -> tuple[IfsmSystem, SolveReport, CollageQp]:
    """Solve the collage inverse problem for ``v`` over the given maps.

    Nonoverlapping families use the closed-form assembly and the separable
    solver; anything else goes through the general path.
    """
    maps = list(maps)
    if is_nonoverlapping(maps).nonoverlapping:
        qp = assemble_nonoverlapping(v, maps)
        region = FeasibleRegion.for_qp(qp, solver.bound, solver.max_contractivity)
        report = solve_separable(qp, region)
    else:
        qp = assemble(v, maps)
        region = FeasibleRegion.for_qp(qp, solver.bound, solver.max_contractivity)
        report = solve(qp, region, kkt_tol=solver.kkt_tol, max_iter=solver.max_iter)
    return IfsmSystem.from_vector(maps, report.x_star), report, qp


# manifests --------------------------------------------------------------------


@dataclass
class RunManifest:
    kind: str
    n: int
    seed: int | None = None
    prng: str | None = None
    base: dict = field(default_factory=dict)
    family: str | None = None
    refine: int = 1
    solver: dict | None = None
    fixed_point: dict | None = None
    outputs: dict = field(default_factory=dict)
    solve_report: dict | None = None
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"format": MANIFEST_FORMAT}
        d.update(asdict(self))
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        d = dict(d)
        fmt = d.pop("format", None)
        if fmt != MANIFEST_FORMAT:
            raise ValueError(f"unsupported manifest format {fmt!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls.from_dict(json.loads(text))

    @classmethod
    def read(cls, src) -> "RunManifest":
        with open(src) as fh:
            return cls.from_json(fh.read())

    @property
    def converged(self) -> bool:
        return self.solve_report is None or bool(self.solve_report["converged"])


@dataclass
class RunOutput:
    """A manifest and the text of every file it lists (written by :meth:`write`)."""

    manifest: RunManifest
    files: dict

    def write(self, outdir) -> str:
        os.makedirs(outdir, exist_ok=True)
        for name, text in self.files.items():
            with open(os.path.join(outdir, name), "w", newline="\n") as fh:
                fh.write(text)
        dest = os.path.join(outdir, "manifest.json")
        with open(dest, "w", newline="\n") as fh:
            fh.write(self.manifest.to_json())
        return dest


@dataclass
class PipelineRun:
    path: SampledPath
    manifest: RunManifest
    base: SampledPath
    system: IfsmSystem
    report: SolveReport
    iterations: int

    def output(self) -> RunOutput:
        files = {
            "base.csv": to_csv_string(self.base),
            "ifsm.csv": to_csv_string(self.path),
            "figure.svg": render_svg(
                [("base", self.base), ("ifsm", self.path)], title="base path and IFSM fixed point"
            ),
            "system.json": self.system.to_json() + "\n",
        }
        return RunOutput(self.manifest, files)


_PIPELINE_FILES = {
    "base_csv": "base.csv",
    "ifsm_csv": "ifsm.csv",
    "svg": "figure.svg",
    "system_json": "system.json",
}


def generate(seed: int, n: int, base: BaseSpec = BaseSpec()) -> RunOutput:
    """A single base trajectory with its CSV, SVG rendering and manifest."""
    stream = GaussianStream(seed)
    path = base.generate(n, stream)
    manifest = RunManifest(
        kind="generate",
        n=n,
        seed=seed,
        prng=stream.algorithm,
        base=base.to_dict(),
        outputs={"path_csv": "path.csv", "svg": "path.svg"},
        summary={"diagnostics": diagnostics(path).to_dict()},
    )
    files = {
        "path.csv": to_csv_string(path),
        "path.svg": render_svg([(base.method, path)], title=f"{base.method} seed {seed}"),
    }
    return RunOutput(manifest, files)


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def invert(
    v: SampledPath,
    M: int,
    solver: SolverOptions = SolverOptions(max_contractivity=None),
    fixed: FixedPointOptions | None = None,
    source: str | None = None,
) -> tuple[RunOutput, IfsmSystem, SolveReport]:
    """Fit a wavelet IFSM to ``v``; optionally iterate to its fixed point."""
    maps = wavelet_family(M)
    system, report, _ = fit_ifsm(v, maps, solver)
    files = {"system.json": system.to_json() + "\n", "report.json": json.dumps(report.to_dict(), indent=2) + "\n"}
    outputs = {"system_json": "system.json", "report_json": "report.json"}
    summary: dict = {"delta2": report.delta2, "contractivity": report.contractivity}
    if fixed is not None:
        fp, its = fixed_point(system, v, tol=fixed.tol, max_iter=fixed.max_iter)
        files["fixed_point.csv"] = to_csv_string(fp)
        outputs["fixed_point_csv"] = "fixed_point.csv"
        summary["fixed_point_iterations"] = its
        summary["l2_distance"] = l2_distance(v, fp)
    base = {"method": "csv"}
    if source is not None:
        base.update(source=os.path.abspath(source), sha256=_sha256(source))
    manifest = RunManifest(
        kind="invert",
        n=v.n,
        base=base,
        family=family_descriptor(M),
        solver=solver.to_dict(),
        fixed_point=None if fixed is None else fixed.to_dict(),
        outputs=outputs,
        solve_report=report.to_dict(),
        summary=summary,
    )
    return RunOutput(manifest, files), system, report


def run_pipeline(
    seed: int = 42,
    M: int = 8,
    n: int = 1024,
    base: BaseSpec = BaseSpec(),
    solver: SolverOptions = SolverOptions(),
    fixed: FixedPointOptions = FixedPointOptions(),
    refine: int = 1,
    *,
    stream=None,
    base_path: SampledPath | None = None,
) -> PipelineRun:
    """Generate a base path, fit the level-1..M wavelet IFSM and iterate to its fixed point.

    ``stream`` or ``base_path`` replace the seeded generator (the manifest
    then records the base as supplied and cannot be replayed).
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if n < 2**M:
        raise ValueError(f"grid n={n} cannot resolve wavelet level {M}; need n >= {2**M}")
    if base_path is not None:
        if base_path.n != n:
            raise ValueError("base path grid does not match n")
        v, prng, base_desc = base_path, None, {"method": "supplied"}
    elif stream is not None:
        v, prng, base_desc = base.generate(n, stream), stream.algorithm, {"method": "supplied"}
    else:
        stream = GaussianStream(seed)
        v, prng, base_desc = base.generate(n, stream), stream.algorithm, base.to_dict()
    system, report, _ = fit_ifsm(v, wavelet_family(M), solver)
    C = contractivity_factor(system)
    if C >= 1:
        raise NotContractiveError(
            f"fitted system has contractivity factor {C:.6g} >= 1; enable the contractivity cap"
        )
    v_fine = v.refine(refine)
    fp, its = fixed_point(system, v_fine, tol=fixed.tol, max_iter=fixed.max_iter)
    dist = l2_distance(v_fine, fp)
    manifest = RunManifest(
        kind="pipeline",
        n=n,
        seed=seed,
        prng=prng,
        base=base_desc,
        family=family_descriptor(M),
        refine=refine,
        solver=solver.to_dict(),
        fixed_point=fixed.to_dict(),
        outputs=dict(_PIPELINE_FILES),
        solve_report=report.to_dict(),
        summary={
            "delta2": report.delta2,
            "contractivity": C,
            "l2_distance": dist,
            "collage_bound": float(np.sqrt(report.delta2)) / (1.0 - C),
            "fixed_point_iterations": its,
            "self_similarity_by_level": {
                str(k): r for k, r in self_similarity_by_level(system, fp).items()
            },
            "diagnostics": {
                "base": diagnostics(v).to_dict(),
                "ifsm": diagnostics(fp).to_dict(),
            },
        },
    )
    return PipelineRun(fp, manifest, v, system, report, its)


def ifsm_bm(
    seed: int = 42,
    M: int = 8,
    n: int = 1024,
    base: BaseSpec = BaseSpec(),
    solver: SolverOptions = SolverOptions(),
    **kwargs,
) -> tuple[SampledPath, RunManifest]:
    """IFSM Brownian-motion path and its manifest; see :func:`run_pipeline`."""
    run = run_pipeline(seed, M, n, base, solver, **kwargs)
    return run.path, run.manifest


# replay -----------------------------------------------------------------------


def replay(manifest: RunManifest) -> RunOutput:
    """Recompute the outputs a manifest describes."""
    if manifest.base.get("method") == "supplied":
        raise ValueError("manifest base path was supplied by the caller and cannot be replayed")
    if manifest.kind == "generate":
        return generate(manifest.seed, manifest.n, BaseSpec.from_dict(manifest.base))
    solver = SolverOptions(**manifest.solver)
    M = parse_family_descriptor(manifest.family)
    if manifest.kind == "invert":
        src = manifest.base.get("source")
        if src is None:
            raise ValueError("invert manifest has no recorded source file")
        if _sha256(src) != manifest.base["sha256"]:
            raise ValueError(f"source {src} changed since the manifest was written")
        fixed = None if manifest.fixed_point is None else FixedPointOptions(**manifest.fixed_point)
        out, _, _ = invert(read_csv(src), M, solver, fixed, source=src)
        return out
    if manifest.kind == "pipeline":
        run = run_pipeline(
            manifest.seed,
            M,
            manifest.n,
            BaseSpec.from_dict(manifest.base),
            solver,
            FixedPointOptions(**manifest.fixed_point),
            manifest.refine,
        )
        return run.output()
    raise ValueError(f"unknown manifest kind {manifest.kind!r}")
