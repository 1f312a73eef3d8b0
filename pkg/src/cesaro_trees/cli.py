"""Command line entry point: ``cesaro-trees <command> [options]``.

Exit codes: 0 success, 2 spec error, 3 I/O failure, 4 numerical
non-convergence, 5 reproduction/envelope failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decomp import compactness_diagnostics, decompose, perturbation_identity_error
from .errors import (
    CesaroError,
    LeafEncountered,
    MalformedSpec,
    NoConvergence,
    NotInDomain,
)
from .operator import (
    CesaroContext,
    StateVector,
    apply_C,
    apply_C_adjoint,
    assemble_dense,
    basis_image_norm_sq,
    dense_to_csv,
)
from .reproduce import demo_unbounded, reproduction_rows
from .spectral import (
    adjoint_path_eigenvector,
    hyponormality_gap,
    point_spectrum_forward_solve,
    section_norm,
    spectrum_certificates,
)
from .tree import TreeGenSpec, build_tree, compute_metrics, m_alpha_sequence

SCHEMA_VERSION = 1
COMMANDS = ("tree-stats", "norm", "apply", "adjoint", "eigvec", "hypo", "pointspec", "decomp",
            "demo-unbounded", "reproduce")
ALPHAS = (0.0, 0.5, 1.0, 2.0)

EXIT_OK, EXIT_SPEC, EXIT_IO, EXIT_NUMERIC, EXIT_FAIL = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    command: str
    tree_spec_path: str | None = None
    depth: int | None = None
    tolerance: float = 1e-10
    series_cap: int = 10**6
    dense_cap: int = 4096
    output_format: str = "json"
    output_path: str | None = None

    def __post_init__(self):
        if self.depth is not None and self.depth < 0:
            raise MalformedSpec("--depth must be >= 0")
        if self.tolerance <= 0:
            raise MalformedSpec("--tol must be positive")
        if self.series_cap < 1 or self.dense_cap < 1:
            raise MalformedSpec("caps must be >= 1")

    def load_spec(self) -> TreeGenSpec:
        if self.tree_spec_path is None:
            raise MalformedSpec(f"{self.command} needs --spec FILE")
        spec = TreeGenSpec.from_json(self.tree_spec_path)
        return spec if self.depth is None else spec.with_depth(self.depth)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json(command: str, payload: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "command": command}
    doc.update(payload)
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _parse_complex(text: str) -> complex:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) == 1:
        return complex(parts[0].replace("i", "j"))
    return complex(float(parts[0]), float(parts[1]))


def _read_lambda_grid(path) -> list[complex]:
    out = []
    for row in csv.reader(Path(path).read_text().splitlines()):
        if not row or row[0].strip().lower() in ("re", "#"):
            continue
        out.append(complex(float(row[0]), float(row[1]) if len(row) > 1 else 0.0))
    return out


# --- commands ------------------------------------------------------------------


def cmd_tree_stats(cfg, args):
    spec = cfg.load_spec()
    tree = build_tree(spec)
    metrics = compute_metrics(tree, spec)
    J = tree.truncation_depth
    table = {}
    for alpha in ALPHAS:
        values, sup = m_alpha_sequence(tree, alpha, J)
        positive = float(values[1:].max()) if J >= 1 else None
        table[str(alpha)] = {"sup": sup, "sup_j_ge_1": positive, "values": values}
    if cfg.output_format == "csv":
        rows = [[j, int(tree.level_sizes[j])] + [repr(float(table[str(a)]["values"][j])) for a in ALPHAS]
                for j in range(J + 1)]
        return _csv(["j", "level_size"] + [f"M_{a}" for a in ALPHAS], rows), EXIT_OK
    payload = {"spec": spec.to_dict(), "vertex_count": tree.vertex_count, "metrics": metrics.to_dict(),
               "m_alpha": table}
    return _json("tree-stats", payload), EXIT_OK


def cmd_norm(cfg, args):
    spec = cfg.load_spec()
    ctx = CesaroContext(build_tree(spec))
    report = section_norm(ctx, tol=cfg.tolerance)
    code = EXIT_OK if report.envelope_ok() else EXIT_FAIL
    if cfg.output_format == "csv":
        rows = [[lbl, repr(v)] for lbl, v in report.lower_certificates]
        rows.append(["section_norm", repr(report.section_norm)])
        rows.append(["upper_bound", str(report.upper_bound)])
        return _csv(["label", "value"], rows), code
    payload = {"spec": spec.to_dict(), "report": report.to_dict()}
    if spec.kind != "explicit":
        # Rayleigh quotient of e_root on the untruncated tree, series closed by tail bounds
        try:
            value = math.sqrt(basis_image_norm_sq(spec, 0, cfg.series_cap, ctx.tree).mid)
            payload["infinite_tree_certificates"] = [["e_root", value]]
        except NotInDomain:
            payload["infinite_tree_certificates"] = []
    return _json("norm", payload), code


def _vector(cfg, args, tree):
    if args.vector:
        return StateVector.from_json(Path(args.vector).read_text(), tree)
    return StateVector.basis(tree, args.vertex or 0)


def _apply(cfg, args, adjoint: bool):
    spec = cfg.load_spec()
    tree = build_tree(spec)
    ctx = CesaroContext(tree)
    name = "adjoint" if adjoint else "apply"
    if args.dense:
        M = assemble_dense(ctx, cap=cfg.dense_cap)
        return dense_to_csv(M.conj().T if adjoint else M), EXIT_OK
    f = _vector(cfg, args, tree)
    g = apply_C_adjoint(ctx, f) if adjoint else apply_C(ctx, f)
    if cfg.output_format == "csv":
        rows = [[v, repr(float(z.real)), repr(float(z.imag))] for v, z in enumerate(g.amplitudes)]
        return _csv(["vertex", "re", "im"], rows), EXIT_OK
    pairs = [[float(z.real), float(z.imag)] for z in g.amplitudes]
    return _json(name, {"spec": spec.to_dict(), "result": pairs}), EXIT_OK


def cmd_eigvec(cfg, args):
    spec = cfg.load_spec()
    ctx = CesaroContext(build_tree(spec))
    if args.lambdas:
        lambdas = _read_lambda_grid(args.lambdas)
    else:
        lambdas = [_parse_complex(s) for s in (args.lam or ["0.5"])]
    if args.lambdas or len(lambdas) > 1:
        rows = spectrum_certificates(ctx, lambdas, tol=cfg.tolerance)
        if cfg.output_format == "csv":
            out = [[r["lambda"][0], r["lambda"][1], r["region"], r.get("residual", r.get("sigma_min", ""))]
                   for r in rows]
            return _csv(["re", "im", "region", "value"], out), EXIT_OK
        return _json("eigvec", {"spec": spec.to_dict(), "certificates": rows}), EXIT_OK
    cert = adjoint_path_eigenvector(ctx, lambdas[0], args.path_index)
    if cfg.output_format == "csv":
        rows = [[v, repr(float(c.real)), repr(float(c.imag))]
                for v, c in zip(cert.path_vertices, cert.coefficients)]
        return _csv(["vertex", "re", "im"], rows), EXIT_OK
    return _json("eigvec", {"spec": spec.to_dict(), "certificate": cert.to_dict()}), EXIT_OK


def cmd_hypo(cfg, args):
    spec = cfg.load_spec()
    choice = "canonical"
    if args.vertex_list:
        choice = {int(v): 1.0 for v in args.vertex_list}
    report = hyponormality_gap(spec, choice, J=cfg.series_cap)
    payload = report.to_dict()
    payload["spec"] = spec.to_dict()
    if cfg.output_format == "csv":
        g = report.gap
        return _csv(["label", "gap_lo", "gap_hi", "closed_form"],
                    [[report.test_vector_label, repr(g.lo), repr(g.hi), report.closed_form]]), EXIT_OK
    return _json("hypo", payload), EXIT_OK


def cmd_pointspec(cfg, args):
    spec = cfg.load_spec()
    ctx = CesaroContext(build_tree(spec))
    try:
        report = point_spectrum_forward_solve(ctx, args.seed, n_max=args.n_max)
    except LeafEncountered as leaf:
        payload = {"leaf_encountered": True, "vertex": leaf.vertex,
                   "eigenvalue": str(leaf.eigenvalue), "eigenvector": f"e_{leaf.vertex}"}
        return _json("pointspec", payload), EXIT_OK
    if cfg.output_format == "csv":
        rows = [[n, v, str(c), str(s)] for n, (v, c, s) in
                enumerate(zip(report.chain, report.coefficients, report.partial_sums))]
        return _csv(["n", "vertex", "coefficient", "partial_sum"], rows), EXIT_OK
    return _json("pointspec", report.to_dict()), EXIT_OK


def cmd_decomp(cfg, args):
    spec = cfg.load_spec()
    tree = build_tree(spec)
    report = decompose(tree, spec, dense_cap=cfg.dense_cap)
    diag = compactness_diagnostics(max(report.k_T, 1), args.section or 64)
    if cfg.output_format == "csv":
        return diag.to_csv(), EXIT_OK
    payload = {"spec": spec.to_dict(), "decomposition": report.to_dict()}
    if report.k_T >= 1 and tree.vertex_count <= cfg.dense_cap:
        M = min(args.section or 512, min(len(c) for c in report.branch_chains))
        payload["perturbation_identity_max_error"] = perturbation_identity_error(
            tree, report, M, cfg.dense_cap)
    payload["delta"] = diag.delta
    payload["gamma"] = diag.gamma
    payload["gamma_closed_form_max_error"] = diag.gamma_error
    return _json("decomp", payload), EXIT_OK


def cmd_demo_unbounded(cfg, args):
    demo = demo_unbounded()
    if cfg.output_format == "csv":
        return demo.to_csv(), EXIT_OK
    return _json("demo-unbounded", demo.to_dict()), EXIT_OK


def cmd_reproduce(cfg, args):
    rows = reproduction_rows(series_cap=cfg.series_cap, tol=cfg.tolerance)
    ok = all(r.passed for r in rows)
    code = EXIT_OK if ok else EXIT_FAIL
    if cfg.output_format == "csv":
        return _csv(["claim", "reference_value", "computed", "tolerance", "pass"],
                    [[r.claim, r.reference_value, repr(r.computed), r.tolerance, r.passed] for r in rows]), code
    return _json("reproduce", {"rows": [r.to_dict() for r in rows], "all_pass": ok}), code


HANDLERS = {
    "tree-stats": cmd_tree_stats,
    "norm": cmd_norm,
    "apply": lambda cfg, args: _apply(cfg, args, adjoint=False),
    "adjoint": lambda cfg, args: _apply(cfg, args, adjoint=True),
    "eigvec": cmd_eigvec,
    "hypo": cmd_hypo,
    "pointspec": cmd_pointspec,
    "decomp": cmd_decomp,
    "demo-unbounded": cmd_demo_unbounded,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cesaro-trees", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--spec", help="tree spec JSON file")
    parser.add_argument("--depth", type=int, help="override the tree file's truncate_depth")
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--series-cap", type=int, default=10**6)
    parser.add_argument("--dense-cap", type=int, default=4096)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", help="output file (default stdout)")
    parser.add_argument("--vector", help="apply/adjoint: JSON array of [re, im] pairs in id order")
    parser.add_argument("--vertex", type=int, help="apply/adjoint: use the basis vector e_VERTEX")
    parser.add_argument("--dense", action="store_true", help="apply/adjoint: emit the dense matrix as CSV")
    parser.add_argument("--lambda", dest="lam", action="append", help="eigvec: eigenvalue as 're,im'")
    parser.add_argument("--lambdas", help="eigvec: CSV file of re,im pairs")
    parser.add_argument("--path-index", type=int, default=0)
    parser.add_argument("--seed", type=int, default=0, help="pointspec: seed vertex")
    parser.add_argument("--n-max", type=int, default=60)
    parser.add_argument("--hypo-vertex", dest="vertex_list", type=int, action="append",
                        help="hypo: test vector is the sum of these basis vectors")
    parser.add_argument("--section", type=int, help="decomp: section size M")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(command=args.command, tree_spec_path=args.spec, depth=args.depth,
                        tolerance=args.tol, series_cap=args.series_cap, dense_cap=args.dense_cap,
                        output_format=args.format, output_path=args.out)
        text, code = HANDLERS[args.command](cfg, args)
    except OSError as exc:
        print(f"cesaro-trees: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoConvergence as exc:
        print(f"cesaro-trees: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CesaroError, ValueError, KeyError, IndexError) as exc:
        print(f"cesaro-trees: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        if cfg.output_path:
            Path(cfg.output_path).write_text(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"cesaro-trees: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
