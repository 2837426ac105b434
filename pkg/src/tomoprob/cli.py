"""Command-line front end: ``tomoprob <subcommand> [options]``.

Exit codes: 0 every check passed, 1 a check failed (including inputs that
are not probability vectors), 2 usage or input error, 3 numerical
inconsistency between two routes to the same quantity.

Reports are canonical JSON (sorted keys). The only run-dependent field is
``timestamp``; everything else is a function of the inputs and the config.
"""

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import DomainError, NumericalConsistencyError, check_probability_vector
from .cumulant import cumulant_report
from .cvstate import WaveFunction, analytic_tomogram, check_state_extended, state_from_tag
from .estimators import CumulantEstimator, HomodyneSamples
from .io import ParseError, dumps, load_json, read_density_matrices, read_probvecs, write_csv_atomic, write_json_atomic
from .probvec import (
    StochasticMap,
    apply_map,
    check_entropy_chain,
    coarsening_chain,
    embedding_inequality,
    mutual_information,
    permutation_entropies,
    portrait_entropies,
    shannon_entropy,
    subadditivity_check,
)
from .qudit import (
    check_tomogram_chain,
    check_von_neumann_bound,
    eigen_tomogram_identity,
    euler_from_direction,
    haar_unitary,
    random_density_matrix,
    spin_from_dim,
    spin32_information,
    two_qubit_information,
    unitary_tomogram,
    wigner_D,
)

SUITES = ("entropy-check", "qudit-check", "state-extended", "nongauss")

# high-resolution Ch values used as reference in nongauss reports
REFERENCE_CH = {"fock:1": -3.41085094412108}
REFERENCE_RTOL = 1e-5

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# portraits are enumerated exhaustively up to this dimension (Bell(8) = 4140)
MAX_PORTRAIT_DIM = 8


@dataclass
class RunConfig:
    """Resolved run settings; serialized verbatim into every report."""

    seed: int = 0
    tolerances: dict = field(
        default_factory=lambda: {
            "inequality": 1e-12,
            "identity": 1e-9,
            "information": 1e-10,
            "consistency": 1e-2,
            "gaussian_ch": 1e-6,
        }
    )
    grids: dict = field(
        default_factory=lambda: {
            "n_t": 32,
            "n_theta": 64,
            "theta_report": 16,
            "t_grid": [0.25, 0.5, 1.0, 2.0],
            "n_max": 4,
            "n_bins": 16,
            "min_count": 500,
            "n_bootstrap": 200,
            "tomographic_n_theta": 64,
            "tomographic_n_x": 256,
            "tomographic_n_r": 128,
        }
    )
    output_dir: str = None

    @classmethod
    def from_file(cls, path):
        data = load_json(path)
        if not isinstance(data, dict):
            raise ParseError(f"{path}: config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ParseError(f"{path}: unknown config fields {unknown}")
        cfg = cls()
        for key in ("tolerances", "grids"):
            extra = sorted(set(data.get(key, {})) - set(getattr(cfg, key)))
            if extra:
                raise ParseError(f"{path}: unknown {key} entries {extra}")
            getattr(cfg, key).update(data.get(key, {}))
        if "seed" in data:
            cfg.seed = int(data["seed"])
        cfg.output_dir = data.get("output_dir", cfg.output_dir)
        return cfg

    def rng(self, suite):
        """Generator for one suite: the run seed split into independent per-suite streams."""
        child = np.random.SeedSequence(self.seed).spawn(len(SUITES))[SUITES.index(suite)]
        return np.random.default_rng(child)


class _Tally:
    """Worst slack and violation count for one named inequality."""

    def __init__(self):
        self.checked = 0
        self.violations = 0
        self.worst = np.inf

    def add(self, slack, tol):
        self.checked += 1
        self.worst = min(self.worst, float(slack))
        if slack < -tol:
            self.violations += 1

    def to_dict(self):
        return {
            "checked": self.checked,
            "violations": self.violations,
            "worst_slack": None if self.checked == 0 else self.worst,
            "holds": self.violations == 0,
        }


def _tallies(names):
    return {n: _Tally() for n in names}


def _summary(tallies):
    return {k: v.to_dict() for k, v in tallies.items() if v.checked}


def _all_hold(tallies):
    return all(t.violations == 0 for t in tallies.values())


def _entropy_suite(vectors, tol):
    tallies = _tallies(
        ["portrait", "chain", "permutation", "center", "subadditivity", "embedding", "mutual_information"]
    )
    rows = []
    for p in vectors:
        n = p.size
        h = shannon_entropy(p)
        if n <= MAX_PORTRAIT_DIM:
            _, hs = portrait_entropies(p)
            tallies["portrait"].add(float(np.min(h - hs)), tol)
            tallies["permutation"].add(-float(np.max(np.abs(permutation_entropies(p) - h))), tol)
        chain = check_entropy_chain(p, coarsening_chain(n)) if n > 1 else None
        if chain is not None:
            tallies["chain"].add(chain.worst_slack, tol)
        centered = shannon_entropy(apply_map(StochasticMap.center(n), p))
        tallies["center"].add(-abs(centered - np.log(n)), tol)
        row = {"dim": n, "entropy": h, "chain_entropies": chain.entropies if chain else [h]}
        if n == 4:
            sub = subadditivity_check(p)
            emb = embedding_inequality(p)
            info = mutual_information(p)
            tallies["subadditivity"].add(sub.gap, tol)
            tallies["embedding"].add(emb.gap, tol)
            tallies["mutual_information"].add(info, tol)
            row.update(subadditivity=sub.to_dict(), embedding=emb.to_dict(), mutual_information=info)
        rows.append(row)
    return tallies, rows


def cmd_entropy_check(args, cfg):
    tol = cfg.tolerances["inequality"]
    result = {}
    if args.random:
        n, count = args.random
        if n < 1 or count < 1:
            raise DomainError("--random needs N >= 1 and COUNT >= 1")
        vectors = list(cfg.rng("entropy-check").dirichlet(np.ones(n), size=count))
        result["input"] = {"random": {"dim": n, "count": count}}
    else:
        raw = read_probvecs(args.input)
        result["input"] = {"file": Path(args.input).name, "count": len(raw)}
        vectors, invalid = [], []
        for i, p in enumerate(raw):
            try:
                vectors.append(check_probability_vector(p))
            except DomainError as exc:
                invalid.append({"index": i, "reason": str(exc)})
        if invalid:
            result["invalid_vectors"] = invalid
            return EXIT_VIOLATION, result
    tallies, rows = _entropy_suite(vectors, tol)
    result["inequalities"] = _summary(tallies)
    if not args.random:
        result["vectors"] = rows
    return (EXIT_OK if _all_hold(tallies) else EXIT_VIOLATION), result


def _qudit_suite(rho, unitaries, tol):
    d = rho.shape[0]
    out = {"dim": d}
    vn = check_von_neumann_bound(rho)
    out["S_VN"] = vn.S_VN
    out["eigenbasis"] = vn.to_dict()
    identity_dev, chain_slack = 0.0, np.inf
    info32, info2q = [], []
    for u in unitaries:
        identity_dev = max(identity_dev, eigen_tomogram_identity(rho, u).deviation)
        chain_slack = min(chain_slack, check_tomogram_chain(rho, u).worst_slack)
        if d == 4:
            info32.append(spin32_information(rho, u).I)
            info2q.append(two_qubit_information(rho, u=u).I)
    out["identity_max_deviation"] = identity_dev
    out["chain_worst_slack"] = None if not unitaries else float(chain_slack)
    if d == 4:
        out["spin32_information_min"] = min(info32)
        out["two_qubit_information_min"] = min(info2q)
    checks = {
        "identity": identity_dev <= tol["identity"],
        "chain": not unitaries or chain_slack >= -tol["inequality"],
        "von_neumann_bound": vn.holds,
    }
    if d == 4:
        checks["information"] = min(info32 + info2q) >= -tol["information"]
    out["checks"] = checks
    return out, all(checks.values())


def cmd_qudit_check(args, cfg):
    rng = cfg.rng("qudit-check")
    if args.random:
        d, count = args.random
        if d < 2 or count < 1:
            raise DomainError("--random needs d >= 2 and COUNT >= 1")
        states = [random_density_matrix(d, rng) for _ in range(count)]
        source = {"random": {"dim": d, "count": count}}
    else:
        states = read_density_matrices(args.input)
        source = {"file": Path(args.input).name, "count": len(states)}
    dims = {rho.shape[0] for rho in states}
    if args.spin is not None:
        try:
            spin = Fraction(args.spin)
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"--spin must be an integer or half-integer, got {args.spin!r}") from None
        if spin < 0 or (2 * spin).denominator != 1:
            raise DomainError(f"--spin must be a non-negative integer or half-integer, got {args.spin!r}")
        want = int(2 * spin) + 1
        bad = sorted(d for d in dims if d != want)
        if bad:
            raise DomainError(f"spin {args.spin} needs dimension {want}, input has {bad}")
    rows, ok = [], True
    for rho in states:
        d = rho.shape[0]
        unitaries = [haar_unitary(d, rng) for _ in range(args.unitaries)]
        if args.spin is not None:
            for _ in range(args.unitaries):
                n = rng.standard_normal(3)
                unitaries.append(wigner_D(spin_from_dim(d), *euler_from_direction(n / np.linalg.norm(n))).conj().T)
        row, passed = _qudit_suite(rho, unitaries, cfg.tolerances)
        if not args.random:
            row["tomogram_z"] = unitary_tomogram(rho, np.eye(d)).tolist()
        rows.append(row)
        ok = ok and passed
    summary = {
        "states": len(rows),
        "failed": sum(not all(r["checks"].values()) for r in rows),
        "max_identity_deviation": max(r["identity_max_deviation"] for r in rows),
    }
    return (EXIT_OK if ok else EXIT_VIOLATION), {"input": source, "summary": summary, "states": rows}


def _load_state(spec):
    path = Path(spec)
    if path.suffix == ".json" or path.is_file():
        return WaveFunction.from_dict(load_json(path)), path.name
    return state_from_tag(spec), spec


def cmd_state_extended(args, cfg):
    psi1, name1 = _load_state(args.psi1)
    psi2, name2 = _load_state(args.psi2)
    g = cfg.grids
    report = check_state_extended(
        psi1,
        psi2,
        tomographic=not args.hilbert_only,
        consistency_tol=cfg.tolerances["consistency"],
        n_theta=g["tomographic_n_theta"],
        n_x=g["tomographic_n_x"],
        n_r=g["tomographic_n_r"],
    )
    result = {"psi1": name1, "psi2": name2, **dict(report)}
    return (EXIT_OK if report.holds else EXIT_VIOLATION), result


def cmd_nongauss(args, cfg):
    g = cfg.grids
    if args.samples:
        samples = HomodyneSamples.from_csv(args.samples)
        seed = int(cfg.rng("nongauss").integers(2**31))
        est = CumulantEstimator(
            n_max=g["n_max"],
            n_bins=g["n_bins"],
            min_count=g["min_count"],
            t_grid=tuple(g["t_grid"]),
            n_t=min(g["n_t"], 16),
            n_bootstrap=g["n_bootstrap"],
            random_state=seed,
        ).fit(samples)
        report = est.report_
        report.source = Path(args.samples).name
        result = report.to_dict()
        if report.Ch is not None and report.Ch_se:
            result["Ch_z_from_zero"] = report.Ch / report.Ch_se
        code = EXIT_OK
    else:
        tom = analytic_tomogram(args.state)
        theta = np.arange(g["theta_report"]) * 2 * np.pi / g["theta_report"]
        report = cumulant_report(
            tom, theta, n_max=g["n_max"], t_grid=tuple(g["t_grid"]), n_t=g["n_t"], n_theta=g["n_theta"]
        )
        report.source = args.state
        result = report.to_dict()
        result["gaussian_consistent"] = abs(report.Ch) < cfg.tolerances["gaussian_ch"]
        code = EXIT_OK
        ref = REFERENCE_CH.get(args.state)
        if ref is not None:
            rel = abs(report.Ch - ref) / abs(ref)
            result["reference"] = {"Ch": ref, "relative_error": rel, "match": rel <= REFERENCE_RTOL}
            if rel > REFERENCE_RTOL:
                code = EXIT_NUMERIC
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        k_head = ["theta"] + [f"K{i}" for i in range(1, report.n_max + 1)]
        write_csv_atomic(out / "cumulants.csv", k_head, report.cumulant_rows())
        write_csv_atomic(out / "deviation.csv", ["theta", "t", "C"], report.deviation_rows())
    return code, result


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="RunConfig JSON file")
    parser.add_argument("--seed", type=int, default=default, help="seed for all randomized draws")
    parser.add_argument("--out", default=default, help="directory for report.json and plot data")
    parser.add_argument(
        "--json", action="store_true", default=argparse.SUPPRESS if suppress else False,
        help="print the full JSON report instead of a summary",
    )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise DomainError(f"{self.prog}: {message}")


def build_parser():
    parser = _Parser(prog="tomoprob", description="Entropic and tomographic checks for quantum states.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("entropy-check", help="entropy inequalities for probability vectors")
    _global_options(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("input", nargs="?", help="JSON probability vector(s)")
    src.add_argument("--random", nargs=2, type=int, metavar=("N", "COUNT"))
    p.set_defaults(func=cmd_entropy_check)

    p = sub.add_parser("qudit-check", help="tomogram identities and entropy bounds for density matrices")
    _global_options(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("input", nargs="?", help="JSON density matrix or list of them")
    src.add_argument("--random", nargs=2, type=int, metavar=("D", "COUNT"))
    p.add_argument("--unitaries", type=int, default=10, help="random unitaries per state")
    p.add_argument("--spin", type=str, default=None, help="spin j (e.g. 3/2); adds spin tomograms")
    p.set_defaults(func=cmd_qudit_check)

    p = sub.add_parser("state-extended", help="state-extended uncertainty relation for two states")
    _global_options(p, suppress=True)
    p.add_argument("--psi1", required=True, help="state tag (vacuum, fock:n, coherent:a, squeezed:r,phi) or JSON file")
    p.add_argument("--psi2", required=True)
    p.add_argument("--hilbert-only", action="store_true", help="skip the tomographic evaluation")
    p.set_defaults(func=cmd_state_extended)

    p = sub.add_parser("nongauss", help="cumulants and nongaussianity of a state or homodyne data")
    _global_options(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--state", help="state tag, e.g. fock:1 or coherent:1+1j")
    src.add_argument("--samples", help="CSV file with columns theta,x")
    p.set_defaults(func=cmd_nongauss)
    return parser


def _resolve_config(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def _summary_line(command, code, result):
    status = {EXIT_OK: "PASS", EXIT_VIOLATION: "FAIL", EXIT_NUMERIC: "INCONSISTENT"}[code]
    if command == "entropy-check" and "invalid_vectors" in result:
        return f"{status}  " + "; ".join(v["reason"] for v in result["invalid_vectors"])
    if command == "entropy-check":
        parts = [f"{k}: {v['violations']}/{v['checked']} violations" for k, v in result["inequalities"].items()]
        return f"{status}  " + "; ".join(parts)
    if command == "qudit-check":
        s = result["summary"]
        return f"{status}  {s['states']} states, {s['failed']} failing, max identity deviation {s['max_identity_deviation']:.2e}"
    if command == "state-extended":
        return f"{status}  lhs={result['lhs']:.10g} rhs_hilbert={result['rhs_hilbert']:.10g} rhs_tomographic={result['rhs_tomographic']}"
    if command == "nongauss":
        return f"{status}  Ch={result['Ch']} t_range={result['t_range']}"
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve_config(args)
        code, result = args.func(args, cfg)
    except NumericalConsistencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {
        "command": args.command,
        "config": dataclasses.asdict(cfg),
        "exit_code": code,
        "result": result,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    report = json.loads(json.dumps(report, default=_json_default))
    if cfg.output_dir:
        write_json_atomic(Path(cfg.output_dir) / "report.json", report)
    if args.json:
        sys.stdout.write(dumps(report))
    else:
        print(_summary_line(args.command, code, result))
    return code


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
