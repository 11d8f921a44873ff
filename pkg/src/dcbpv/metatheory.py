"""Executable metatheorems: subject reduction, determinism, normalization.

Each check returns a Report.  A failing report carries enough to replay the
failure: flags, strategy, and the transition-label path from the initial
configuration to the failing one.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .kernel import CannotSynth, Checker, Context, TypingError
from .machine import (
    BRANCH_CAP, Config, FuelExhausted, Stuck, Terminal, _successors, classify,
    config_types, inject, leaves, reachable, run,
)
from .parser import ParseError, Program, parse_program, pretty
from .syntax import Choose, Diverge, EffectSignature, Flags, Mu, iter_children

PROPERTIES = ("subject-reduction", "determinism", "normalization", "iso", "adequacy")


@dataclass
class Report:
    program: str
    property: str
    verdict: str            # pass | fail | inconclusive-fuel | skipped | error
    witness: Optional[dict] = None
    expected_fail: bool = False

    @property
    def unexpected(self) -> bool:
        if self.verdict in ("fail", "error"):
            return not self.expected_fail
        return self.expected_fail and self.verdict == "pass"

    def to_json(self) -> dict:
        d = asdict(self)
        d["unexpected"] = self.unexpected
        return d


@dataclass
class Subject:
    """A closed program with its signature and intended type."""
    name: str
    sig: EffectSignature
    main: object
    ty: object = None
    flags: Optional[Flags] = None

    @classmethod
    def of(cls, prog: Program, name="main", flags: Optional[Flags] = None):
        f = prog.signature.features if flags is None else prog.signature.features.merge(flags)
        return cls(name, prog.signature.with_flags(f), prog.main, prog.main_ty, f)


def _contains(t, kinds) -> bool:
    if isinstance(t, kinds):
        return True
    return any(_contains(c, kinds) for _, _, c, _ in iter_children(t))


def replay(sig, main, path) -> Config:
    """Follow a label path from the initial configuration."""
    c = inject(main, sig)
    for label in path:
        for t in _successors(sig, c):
            if t.label == label:
                c = t.config
                break
        else:
            raise ValueError(f"no transition labelled {label!r} from {pretty(c.comp)}")
    return c


def _target(s: Subject, ch: Checker):
    if s.ty is not None:
        ch.check_comp(Context(), s.main, s.ty)
        return s.ty
    return ch.synth_comp(Context(), s.main)


def check_subject_reduction(s: Subject, fuel: int = 10_000, strategy="all") -> Report:
    """Type every reachable configuration at the program's type."""
    flags = s.flags or s.sig.features
    ch = Checker(s.sig, flags)
    try:
        target = _target(s, ch)
    except CannotSynth as e:
        if s.ty is None:
            return Report(s.name, "subject-reduction", "skipped",
                          {"reason": f"unannotated and does not synthesize: {e}"})
        return Report(s.name, "subject-reduction", "error",
                      {"step": 0, "message": f"program does not type-check: {e}"})
    except TypingError as e:
        return Report(s.name, "subject-reduction", "error",
                      {"step": 0, "message": f"program does not type-check: {e}"})
    if strategy == "all":
        walk = reachable(s.sig, inject(s.main, s.sig), fuel)
    else:
        walk = _single_path(s, fuel, strategy)
    for c, n, path in walk:
        err = config_types(s.sig, flags, c, target)
        if err is not None:
            return Report(s.name, "subject-reduction", "fail", {
                "step": n, "rule": path[-1] if path else None, "path": list(path),
                "flags": flags.names(), "strategy": str(strategy),
                "comp": pretty(c.comp), "message": str(err),
            })
    return Report(s.name, "subject-reduction", "pass")


def _single_path(s, fuel, strategy):
    from .machine import _strategy
    strat = _strategy(strategy)
    c = inject(s.main, s.sig)
    path = ()
    yield c, 0, path
    for n in range(1, fuel + 1):
        succ = _successors(s.sig, c)
        if not succ:
            return
        t = succ[strat.pick(len(succ))] if len(succ) > 1 else succ[0]
        c, path = t.config, path + (t.label,)
        yield c, n, path


def check_determinism(s: Subject, fuel: int = 10_000) -> Report:
    if _contains(s.main, Choose):
        return Report(s.name, "determinism", "skipped", {"reason": "program uses choose"})
    for c, n, path in reachable(s.sig, inject(s.main, s.sig), fuel):
        succ = _successors(s.sig, c)
        if len(succ) > 1:
            return Report(s.name, "determinism", "fail", {
                "step": n, "path": list(path), "labels": [t.label for t in succ]})
    return Report(s.name, "determinism", "pass")


def check_normalization(s: Subject, fuel: int = 10_000) -> Report:
    if _contains(s.main, (Diverge, Mu)):
        return Report(s.name, "normalization", "skipped", {"reason": "uses diverge or mu"})
    out = run(s.sig, s.main, fuel, "all" if _contains(s.main, Choose) else "first")
    for leaf in leaves(out):
        if isinstance(leaf, FuelExhausted):
            return Report(s.name, "normalization", "inconclusive-fuel", {"fuel": fuel})
        if isinstance(leaf, Stuck):
            return Report(s.name, "normalization", "fail", {
                "reason": leaf.reason, "comp": pretty(leaf.config.comp), "step": leaf.steps})
    return Report(s.name, "normalization", "pass")


# ------------------------------------------------------------------ corpus

@dataclass
class CorpusReport:
    reports: list = field(default_factory=list)

    def totals(self) -> dict:
        out = {p: {} for p in PROPERTIES}
        for r in self.reports:
            key = "expected-fail" if r.expected_fail and r.verdict == "fail" else r.verdict
            out.setdefault(r.property, {})
            out[r.property][key] = out[r.property].get(key, 0) + 1
        return out

    @property
    def unexpected_failures(self) -> int:
        return sum(1 for r in self.reports if r.unexpected)

    def merge(self, other: "CorpusReport") -> "CorpusReport":
        return CorpusReport(self.reports + other.reports)

    def table(self) -> str:
        rows = [f"{'program':<40} {'property':<18} verdict"]
        for r in self.reports:
            v = r.verdict + (" (expected)" if r.expected_fail and r.verdict == "fail" else "")
            if r.unexpected:
                v += "  <-- unexpected"
            rows.append(f"{r.program:<40} {r.property:<18} {v}")
        rows.append("")
        for prop, counts in self.totals().items():
            if counts:
                rows.append(f"{prop:<18} " + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
        rows.append(f"unexpected failures: {self.unexpected_failures}")
        return "\n".join(rows)

    def to_json(self) -> str:
        return json.dumps({"reports": [r.to_json() for r in self.reports],
                           "totals": self.totals(),
                           "unexpected_failures": self.unexpected_failures}, indent=2)


def check_program(s: Subject, expect=frozenset(), fuel: int = 10_000) -> list:
    reps = [check_subject_reduction(s, fuel), check_determinism(s, fuel),
            check_normalization(s, fuel)]
    for r in reps:
        r.expected_fail = r.property in expect
    return reps


def run_corpus(path, flags: Optional[Flags] = None, fuel: int = 10_000, fuzz: int = 0,
               seed: int = 0, isos: bool = False) -> CorpusReport:
    """Check every .dcbpv/.dtt file under ``path`` plus ``fuzz`` generated programs."""
    rep = CorpusReport()
    p = Path(path)
    files = sorted(p.glob("*.dcbpv")) + sorted(p.glob("*.dtt")) if p.is_dir() else [p]
    for f in files:
        try:
            text = f.read_text(encoding="utf-8")
            if f.suffix == ".dtt":
                rep.reports.extend(_check_surface(f.name, text, flags, fuel))
                continue
            prog = parse_program(text)
        except (OSError, ParseError, UnicodeDecodeError) as e:
            rep.reports.append(Report(f.name, "subject-reduction", "error", {"message": str(e)}))
            continue
        if prog.main is None:
            continue
        rep.reports.extend(check_program(Subject.of(prog, f.name, flags), prog.expect_fail, fuel))
    if fuzz:
        from .generate import SIGNATURE, generate
        for i in range(fuzz):
            g = generate(seed + i)
            s = Subject(f"generated#{seed + i}", SIGNATURE, g.main, g.ty, flags)
            rep.reports.extend(check_program(s, fuel=fuel))
    if isos:
        rep.reports.extend(check_isos())
    return rep


def _check_surface(name, text, flags, fuel) -> list:
    from .translate import (
        TSum, TUnit, evaluate_both, parse_surface_program, translate_program,
    )
    prog = parse_surface_program(text)
    main, ty = translate_program(prog, "cbn")
    fl = flags or prog.signature.features
    s = Subject(name + " [cbn]", prog.signature, main, ty, fl)
    reps = check_program(s, prog.expect_fail, fuel)
    if isinstance(prog.main_ty, TSum) and all(isinstance(t, TUnit) for t in prog.main_ty.items):
        v, n = evaluate_both(prog.main, prog.signature, fuel)
        ok = v is not None and v == n
        reps.append(Report(name, "adequacy", "pass" if ok else "fail",
                           None if ok else {"cbv": v, "cbn": n}))
    return reps


def check_isos(fuel: int = 10_000) -> list:
    from .translate import check_iso_case, iso_witnesses
    out = []
    for w in iso_witnesses():
        bad = [c.label for c in w.cases if not check_iso_case(c, fuel=fuel)]
        out.append(Report(f"iso {w.name}", "iso", "fail" if bad else "pass",
                          {"cases": bad} if bad else None))
    return out
