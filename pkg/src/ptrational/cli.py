"""Command line front end: run scenario queries and print a deterministic report.

Exit status is 0 on success, 1 when the scenario or the flags fail
validation, and 2 when a certificate or an invariant check fails.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import __version__
from .classlat import KClass, factors, is_superpositive
from .errors import ArtifactError, CertificationError, InputError
from .exact import Vec, fraction_text, is_zero
from .ratgen import gf_expand, normalized_text, pole_locations, poles_are_admissible, poles_text, qp_tail_to_gf
from .scenario import load_scenario
from .stability import PairCondition, SlopeCondition
from .vertexmodel import basis_text
from .wallcoeffs import coeff_S, coeff_U, coeff_Utilde, distinct_orderings, graded_pieces, dynkin_rho, lie_expand, word_sum
from .wallcross import WallCrossEngine, apply_insertion

SUBCOMMANDS = ("coeffs", "wallcross", "ptgen", "expand", "verify")
DEFAULT_N_MAX = 10


def value_text(v) -> str:
    if isinstance(v, Vec):
        return v.text(basis_text)
    if isinstance(v, Fraction) or isinstance(v, int):
        return fraction_text(Fraction(v))
    return str(v)


def word_text(word) -> str:
    return " ".join(str(c) for c in word)


def _cert_lines(cert: dict) -> list[str]:
    lines = []
    for key, v in cert.items():
        if key == "poles":
            lines.append(f"  poles: {poles_text(v)}")
        elif key == "chambers":
            lines.append("  chambers:")
            lines.extend(f"    {c}" for c in v)
        elif key == "denominator":
            lines.append(f"  denominator: q^{v['q_power']} * (1 - q^{v['period']})^{v['exponent']}")
        else:
            lines.append(f"  {key}: {v}")
    return lines


def _tau(spec, geometry):
    kind, data = spec
    return PairCondition(geometry, data) if kind == "pair" else SlopeCondition(geometry, data)


def _tau_text(spec) -> str:
    kind, data = spec
    if kind == "pair":
        return f"pair slope with c = {fraction_text(data)}"
    return "slope with omega = [" + ", ".join(fraction_text(x) for x in data) + "]"


class Runner:
    """Runs queries of one scenario; each ``run_*`` method returns report lines."""

    def __init__(self, scenario, args):
        self.sc = scenario
        self.args = args
        self.engine = WallCrossEngine(scenario, memo=not args.no_memo)

    # -- coefficient tables --------------------------------------------
    def run_coeffs(self, q) -> list[str]:
        geo = self.sc.geometry
        tau, tau_t = _tau(q["tau"], geo), _tau(q["tau_new"], geo)
        lines = [f"from: {_tau_text(q['tau'])}", f"to: {_tau_text(q['tau_new'])}",
                 "S and U by ordering:"]
        for w in distinct_orderings(q["classes"]):
            lines.append(f"  {word_text(w)}: S = {coeff_S(w, tau, tau_t)}, U = {fraction_text(coeff_U(w, tau, tau_t))}")
        lie = coeff_Utilde(q["classes"], tau, tau_t)
        lines.append("Utilde (left-nested brackets):")
        nonzero = sorted((w, c) for w, c in lie.items() if c)
        lines.extend(f"  [{word_text(w)}]: {fraction_text(c)}" for w, c in nonzero)
        if not nonzero:
            lines.append("  all zero")
        return lines

    # -- DT wall-crossing ----------------------------------------------
    def run_wallcross(self, q) -> list[str]:
        beta, n, omega_new = q["beta"], q["n"], q["omega_new"]
        old = self.engine.dt_value(beta, n)
        new = self.engine.dt_wallcross(beta, n, omega_new)
        lo, hi = self.engine.dt_slope_hull(beta, n, omega_new)
        lines = [
            f"omega_new: [{', '.join(fraction_text(x) for x in omega_new)}]",
            f"slope hull: [{fraction_text(lo)}, {fraction_text(hi)}]",
            f"multisets: {len(self.engine.dt_multisets(beta, n, omega_new))}",
            f"value before: {value_text(old)}",
            f"value after: {value_text(new)}",
        ]
        if self.args.oracle:
            from .oracle import dt_wallcross_bruteforce

            brute = dt_wallcross_bruteforce(self.sc, beta, n, omega_new)
            if brute != new:
                raise CertificationError("brute-force wall-crossing disagrees", value_text(brute))
            lines.append("oracle: brute-force ordered-word sum agrees")
        return lines

    # -- generating functions --------------------------------------------
    def _series(self, beta, samples=None):
        return self.engine.pt_series(beta, samples)

    def run_ptgen(self, q) -> list[str]:
        beta = q["beta"]
        gf, cert = self._series(beta, q.get("samples"))
        lines = [f"generating function: {normalized_text(gf, basis_text)}", "certificate:"]
        lines += _cert_lines(cert)
        if "insertion" in q:
            scalar = apply_insertion(q["insertion"], gf, self.sc.truncation)
            lines.append(f"insertion (degree {q['insertion'].degree}): {normalized_text(scalar)}")
            lines.append(f"insertion poles: {poles_text(pole_locations(scalar))}")
        if self.args.oracle:
            from .oracle import BruteForcePT

            brute = BruteForcePT(self.sc)
            n0 = cert["recursion_from"]
            for n in range(n0, n0 + 3):
                if brute.value(beta, n) != self.engine.pt_value(beta, n):
                    raise CertificationError("brute-force recursion disagrees", (list(beta), n))
            lines.append(f"oracle: brute-force recursion agrees for n = {n0}..{n0 + 2}")
        return lines

    def run_expand(self, q) -> list[str]:
        n_max = self.args.n_max if self.args.n_max is not None else q.get("n_max", DEFAULT_N_MAX)
        if "beta" in q:
            gf, _cert = self._series(q["beta"], q.get("samples"))
        else:
            gf = qp_tail_to_gf(q["vanishing"], q["exceptional"], q["tail"], q["tail_from"])
        lines = [f"generating function: {normalized_text(gf, basis_text)}", f"coefficients up to q^{n_max}:"]
        lines += [f"  q^{n}: {value_text(v)}" for n, v in gf_expand(gf, n_max).items()]
        return lines

    # -- invariant suite ---------------------------------------------------
    def run_verify(self) -> tuple[list[str], list[str]]:
        """(report lines, failures)."""
        lines: list[str] = []
        failures: list[str] = []

        def check(name, ok, witness=""):
            lines.append(f"{'ok  ' if ok else 'FAIL'} {name}" + ("" if ok else f": {witness}"))
            if not ok:
                failures.append(name)

        geo = self.sc.geometry
        classes = sorted(b for b in self.sc.thresholds if is_superpositive(b, geo)
                         and all(g in self.sc.vanishing for g in factors(b, geo)))
        for beta in classes:
            tag = f"class {list(beta)}"
            try:
                gf, cert = self._series(beta)
            except CertificationError as exc:
                check(f"{tag}: certified generating function", False, exc)
                continue
            check(f"{tag}: certified generating function", True)
            poles = pole_locations(gf)
            check(f"{tag}: poles only at 0 and roots of unity", poles_are_admissible(poles), poles_text(poles))
            n0 = cert["recursion_from"]
            probe = range(n0, n0 + 3)
            bad = [n for n in probe if not is_zero(self.engine.eq_residual(beta, n))]
            check(f"{tag}: k = 1 term plus k >= 2 sum vanishes for n = {n0}..{n0 + 2}", not bad, bad)
            cm = self.engine.c_minus(beta, n0)
            cp = self.engine.c_plus(beta, n0, self.engine.recursion_multisets(beta, n0, cm))
            single = coeff_Utilde([KClass(1, beta, n0)], PairCondition(geo, cp), PairCondition(geo, cm))
            check(f"{tag}: singleton coefficient is 1", single.get((KClass(1, beta, n0),)) == 1, dict(single))
            moved = self.engine.level_choice_changes(beta, n0)
            check(f"{tag}: bracket coefficients unchanged under other admissible wall levels (n = {n0})",
                  not moved, moved[:1])
            fresh = WallCrossEngine(self.sc, memo=False)
            bad = [n for n in probe if fresh.pt_value(beta, n) != self.engine.pt_value(beta, n)]
            check(f"{tag}: same values with caching off", not bad, bad)
            if self.args.oracle:
                from .oracle import BruteForcePT

                brute = BruteForcePT(self.sc)
                bad = [n for n in probe if brute.value(beta, n) != self.engine.pt_value(beta, n)]
                check(f"{tag}: brute-force recursion agrees", not bad, bad)
        bad = [(r.beta, r.n) for r in self.engine.records if not r.residual_ok]
        check(f"recursion records: {len(self.engine.records)} steps, all balanced", not bad, bad)
        if self.sc.dt.tables:
            cases, misses = self.engine.kernel_survey()
            note = f", first outside: {misses[0][0]} with {misses[0][1]}" if misses else ""
            lines.append(f"info general lifted bracket stays in the kernel of R in {cases - len(misses)} of {cases} cases{note}")
        for i, q in enumerate(self.sc.queries):
            if q["op"] == "coeffs":
                tau, tau_t = _tau(q["tau"], geo), _tau(q["tau_new"], geo)
                p = word_sum(q["classes"], tau, tau_t)
                try:
                    lie = coeff_Utilde(q["classes"], tau, tau_t)
                except CertificationError as exc:
                    check(f"query {i}: word sum is Lie", False, exc)
                    continue
                check(f"query {i}: bracket expansion reproduces the word sum", lie_expand(lie) == p)
                ok = all(dynkin_rho(piece) == piece * k for k, piece in graded_pieces(p).items())
                check(f"query {i}: Dynkin map acts by word length", ok)
            elif q["op"] == "wallcross":
                beta, n = q["beta"], q["n"]
                same = self.engine.dt_wallcross(beta, n, geo.omega)
                check(f"query {i}: unchanged Kähler vector leaves the DT value fixed",
                      same == self.engine.dt_value(beta, n), value_text(same))
                if self.args.oracle:
                    from .oracle import dt_wallcross_bruteforce

                    new = self.engine.dt_wallcross(beta, n, q["omega_new"])
                    check(f"query {i}: brute-force wall-crossing agrees",
                          new == dt_wallcross_bruteforce(self.sc, beta, n, q["omega_new"]))
            elif q["op"] == "expand" and "beta" not in q:
                gf = qp_tail_to_gf(q["vanishing"], q["exceptional"], q["tail"], q["tail_from"])
                hi = q["tail_from"] + 4 * q["tail"].period + 20
                exp = gf_expand(gf, hi, q["vanishing"] - 2)
                want = {n: (Fraction(0) if n <= q["vanishing"] else
                            q["exceptional"].get(n, 0) if n < q["tail_from"] else q["tail"](n))
                        for n in exp}
                bad = [n for n in exp if not _same(exp[n], want[n])]
                check(f"query {i}: generating function re-expands to its sequence", not bad, bad)
        return lines, failures


def _same(a, b) -> bool:
    if is_zero(a) and is_zero(b):
        return True
    return a == b


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ptrational", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("scenario", help="path to a scenario JSON file")
    p.add_argument("--n-max", type=int, default=None, help="last coefficient printed by expand")
    p.add_argument("--truncation", type=int, default=None, help="override the truncation level of the ring")
    p.add_argument("--no-memo", action="store_true", help="disable the recursion cache")
    p.add_argument("--oracle", action="store_true", help="cross-check against brute-force expansions")
    p.add_argument("--jobs", type=int, default=1, help="queries evaluated concurrently")
    p.add_argument("--timing", action="store_true", help="append wall-clock times (breaks byte-identical output)")
    p.add_argument("--output", default=None, help="write the report here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true", help="log enumeration sizes to stderr")
    return p


def _header(sc, args) -> list[str]:
    flags = [f"n_max={args.n_max if args.n_max is not None else '-'}",
             f"truncation={args.truncation if args.truncation is not None else '-'}",
             f"memo={'off' if args.no_memo else 'on'}", f"oracle={'on' if args.oracle else 'off'}"]
    return [f"ptrational {__version__}", f"scenario: {sc.name}", f"sha256: {sc.source_hash}",
            f"command: {args.command}", f"options: {' '.join(flags)}"]


def _query_title(i, q) -> str:
    extra = ""
    if "beta" in q:
        extra += f" beta={list(q['beta'])}"
    if "n" in q:
        extra += f" n={q['n']}"
    return f"== query {i}: {q['op']}{extra}"


def run(argv=None) -> tuple[int, str, str | None]:
    """Parse ``argv`` and run the command; returns (exit status, report text, output path)."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    if args.n_max is not None and args.n_max < 0:
        raise InputError("must be nonnegative", "--n-max")
    if args.jobs < 1:
        raise InputError("must be at least 1", "--jobs")
    sc = load_scenario(args.scenario, args.truncation)
    runner = Runner(sc, args)
    out = _header(sc, args)
    status = 0
    if args.command == "verify":
        start = time.perf_counter()
        lines, failures = runner.run_verify()
        out += ["", "== invariant suite"] + lines
        out.append(f"result: {'PASS' if not failures else f'FAIL ({len(failures)} checks)'}")
        if args.timing:
            out.append(f"time: {time.perf_counter() - start:.3f} s")
        status = 2 if failures else 0
    else:
        queries = [(i, q) for i, q in enumerate(sc.queries) if q["op"] == args.command]
        if not queries:
            raise InputError(f"scenario has no '{args.command}' queries", "queries")
        method = getattr(runner, f"run_{args.command}")

        def task(item):
            i, q = item
            start = time.perf_counter()
            lines = method(q)
            if args.timing:
                lines.append(f"time: {time.perf_counter() - start:.3f} s")
            return [""] + [_query_title(i, q)] + lines

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for block in pool.map(task, queries):
                out += block
    return status, "\n".join(out) + "\n", args.output


def main(argv=None) -> int:
    try:
        status, text, path = run(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return 2
    except ArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if path:
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: --output: {exc.strerror}", file=sys.stderr)
            return 1
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
