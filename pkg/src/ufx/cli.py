"""Command-line front end: ``ufx <command> ...``.

Exit status is 0 on success, 1 when a check fails and 2 on usage or
input errors. ``--format structured`` prints JSON carrying a
``schema_version`` field.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from . import beta, formula, model, papersuite, symbolic

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- input helpers ---------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_model(path: str, strict: bool = True) -> model.Model:
    return model.parse_model(_read(path), strict=strict)


def _load_map(path: str) -> tuple[int, ...]:
    """A map file lists the image of 0, 1, 2, ... as JSON or as whitespace/comma separated integers."""
    text = _read(path)
    if text.lstrip().startswith("["):
        values = json.loads(text)
    else:
        body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
        tokens = [t for t in re.split(r"[\s,]+", body) if t]
        if not all(t.isdigit() for t in tokens):
            raise UsageError(f"{path}: a map is a list of non-negative integers")
        values = [int(t) for t in tokens]
    return tuple(values)


def _formula_text(arg: str) -> str:
    return _read(arg) if os.path.isfile(arg) else arg


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in re.split(r"[\s,]+", text.strip()) if t]
    except ValueError:
        raise UsageError(f"expected comma separated integers, got {text!r}") from None


def _binding(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), value.strip()


def _default_seed() -> int:
    raw = os.environ.get("UFX_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"UFX_SEED must be an integer, got {raw!r}") from None


# --- output ----------------------------------------------------------------------

class Output:
    def __init__(self, fmt: str, stream):
        self.fmt = fmt
        self.stream = stream

    def emit(self, text: str, data: dict) -> None:
        if self.fmt == "structured":
            self.stream.write(json.dumps({"schema_version": SCHEMA_VERSION, **data}, indent=2, sort_keys=True) + "\n")
        else:
            self.stream.write(text if text.endswith("\n") else text + "\n")


def _violations_data(vs) -> list[dict]:
    return [{"kind": v.kind, "symbol": v.symbol, "tuple": list(v.tuple) if v.tuple is not None else None,
             "message": v.message} for v in vs]


# --- commands --------------------------------------------------------------------

def cmd_model_validate(args, out: Output) -> int:
    m = _load_model(args.file, strict=False)
    problems = model.validate_model(m)
    text = "valid" if not problems else "\n".join(f"violation: {v.message}" for v in problems)
    out.emit(text, {"valid": not problems, "violations": _violations_data(problems)})
    return 1 if problems else 0


def cmd_model_beta(args, out: Output) -> int:
    m = _load_model(args.file)
    bm = beta.beta_extend(m, args.mode)
    emb = beta.natural_embedding(m, bm)
    label = model.classify_map(emb)
    names = bm.point_names()
    text = model.serialize_model(bm.model, names)
    text += f"# natural embedding: {' '.join(f'{a}->{names[v]}' for a, v in enumerate(emb.map))}\n"
    text += f"# natural embedding is an {label}\n" if label == model.ISOMORPHISM else f"# natural embedding: {label}\n"
    out.emit(text, {"mode": args.mode, "model": model.model_to_dict(bm.model),
                    "points": [str(d) for d in bm.universe], "embedding": list(emb.map),
                    "embedding_classification": label})
    return 0


def cmd_model_ultrafilters(args, out: Output) -> int:
    m = _load_model(args.file)
    ufs = beta.enumerate_ultrafilters(m.size)
    out.emit("\n".join(str(d) for d in ufs), {"ultrafilters": [str(d) for d in ufs]})
    return 0


def cmd_model_convert(args, out: Output) -> int:
    m = _load_model(args.file)
    if args.to == "json":
        text = json.dumps(model.model_to_dict(m), indent=2, sort_keys=True) + "\n"
    else:
        text = model.serialize_model(m)
    out.stream.write(text)
    return 0


def _witness(src: str, dst: str, map_file: str) -> model.MapWitness:
    return model.MapWitness(_load_model(src), _load_model(dst), _load_map(map_file))


def cmd_model_classify(args, out: Output) -> int:
    label = model.classify_map(_witness(args.source, args.target, args.map))
    out.emit(label, {"classification": label})
    return 0


def cmd_eval(args, out: Output) -> int:
    m = _load_model(args.model)
    f = formula.parse_formula(_formula_text(args.formula), m.vocab)
    env = {}
    for b in args.let:
        name, value = _binding(b)
        if not value.isdigit():
            raise UsageError(f"--let {name}: expected a point number, got {value!r}")
        env[name] = int(value)
    ufs = {}
    for b in args.uf:
        name, value = _binding(b)
        kind, _, point = value.partition(":")
        if kind != "principal" or not point.isdigit():
            raise UsageError(f"--uf {name}: finite models take principal:N, got {value!r}")
        ufs[name] = beta.principal(m.size, int(point))
    verdict = formula.evaluate(m, f, formula.Assignment(env, ufs))
    out.emit(str(verdict).lower(), {"formula": formula.to_text(f), "value": verdict})
    return 0


def cmd_lift(args, out: Output) -> int:
    w = _witness(args.source, args.target, args.map)
    rep = beta.lift_check(w, args.mode)
    sb = beta.beta_extend(w.source, args.mode)
    images = [str(beta.pushforward(w, d)) for d in sb.universe]
    lines = [f"{d} -> {img}" for d, img in zip(sb.universe, images)]
    lines.append(f"source map: {rep.source_classification}")
    lines.append(f"lifted map: {rep.lifted_classification}")
    if rep.note:
        lines.append(f"note: {rep.note}")
    lines.append("pass" if rep.passed else "FAIL")
    out.emit("\n".join(lines), {**rep.as_dict(), "pushforward": images})
    return 0 if rep.passed else 1


def cmd_uf_measure(args, out: Output) -> int:
    v = symbolic.measure(symbolic.parse_symbolic_uf(args.d), symbolic.parse_epset(args.set))
    out.emit(str(v), {"value": str(v)})
    return 0


def cmd_uf_two_level(args, out: Output) -> int:
    fam = symbolic.ParamFamily(symbolic.parse_epset(args.base), None if args.cut == "none" else args.cut)
    domain = symbolic.parse_epset(args.domain) if args.domain else symbolic.EPSet.naturals()
    v = symbolic.eval_two_level(symbolic.parse_symbolic_uf(args.d1), symbolic.parse_symbolic_uf(args.d2), fam, domain)
    out.emit(str(v), {"value": str(v)})
    return 0


def cmd_uf_pair_image(args, out: Output) -> int:
    a1 = symbolic.parse_epset(args.a1)
    a2 = symbolic.parse_epset(args.a2) if args.a2 else a1.complement()
    pairing = symbolic.CantorPairing(args.offset)
    v = symbolic.pair_image_membership(a1, a2, args.order, symbolic.parse_symbolic_uf(args.d1),
                                       symbolic.parse_symbolic_uf(args.d2), pairing)
    out.emit(str(v), {"value": str(v)})
    return 0


def cmd_epset(args, out: Output) -> int:
    sets = [symbolic.parse_epset(s) for s in args.sets]
    if args.op == "show":
        if len(sets) != 1:
            raise UsageError("epset show takes one set")
        result = sets[0]
    elif args.op == "cut":
        if len(sets) != 1 or not args.bound:
            raise UsageError("epset cut takes one set and --bound '>n' or '<n'")
        result = symbolic.epset_cut(sets[0], args.bound)
    else:
        result = symbolic.epset_algebra(args.op, *sets)
    members = result.members(args.limit)
    text = f"{result}\nfinite: {str(result.is_finite()).lower()}\nmembers below {args.limit}: {members}"
    out.emit(text, {"set": str(result), "finite": result.is_finite(), "members": members, "limit": args.limit})
    return 0


def cmd_lemma3(args, out: Output) -> int:
    if (args.partition is None) == (args.k is None):
        raise UsageError("lemma3 takes either --partition EPSET or --k K --a1 LIST")
    if args.partition is not None:
        rep = papersuite.lemma3_symbolic(symbolic.parse_epset(args.partition))
        data = rep.as_dict()
        lines = [f"{key}: {str(v).lower() if isinstance(v, bool) else v}" for key, v in data.items()]
        lines.append("F(D1,D2) != F(D2,D1)" if rep.extensions_differ else "extensions not separated")
        out.emit("\n".join(lines), data)
        return 0 if rep.expected else 1
    if args.a1 is None:
        raise UsageError("lemma3 --k needs --a1")
    rep = papersuite.lemma3_finite(args.k, _int_list(args.a1))
    data = {"A1": sorted(rep.a1), "A2": sorted(rep.a2), "B1": sorted(rep.b1), "B2": sorted(rep.b2),
            "disjoint": rep.disjoint}
    text = "\n".join(f"{key}: {str(v).lower() if isinstance(v, bool) else v}" for key, v in data.items())
    out.emit(text, data)
    return 0 if rep.disjoint else 1


def cmd_cut(args, out: Output) -> int:
    seq = _int_list(args.order)
    if sorted(seq) != list(range(len(seq))):
        raise UsageError("--order must list 0..n-1 from least to greatest, each once")
    if not 0 <= args.at < len(seq):
        raise UsageError(f"--at {args.at} is not a point of the order")
    cp = papersuite.cut_segments(papersuite.linear_order(seq), beta.principal(len(seq), args.at))
    data = {"I": sorted(cp.initial), "J": sorted(cp.final), "meet": sorted(cp.initial & cp.final)}
    out.emit("\n".join(f"{k}: {v}" for k, v in data.items()), data)
    return 0


def cmd_paper_suite(args, out: Output) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    rep = papersuite.run_suite(args.k, seed, args.mutant)
    out.emit(rep.to_text(), rep.as_dict())
    return 0 if rep.passed else 1


def cmd_paper_m1(args, out: Output) -> int:
    m1 = papersuite.build_m1(args.k)
    names = [str(i) for i in range(m1.k)]
    names += [f"pair{{{a},{b}}}" for a, b in (m1.carrier_pair(c) for c in m1.num_sort[m1.k:])]
    names += ["{" + ",".join(map(str, sorted(m1.subset_of(s)))) + "}" for s in m1.set_sort]
    text = model.serialize_model(m1.model, names)
    text += "".join(f"# deviation: {d}\n" for d in m1.deviations)
    out.emit(text, {"k": m1.k, "model": model.model_to_dict(m1.model), "num_base": list(m1.num_base),
                    "set_base": list(m1.set_base), "deviations": list(m1.deviations)})
    return 0


def cmd_paper_formula(args, out: Output) -> int:
    f = papersuite.formula_psi() if args.which == "psi" else papersuite.formula_phi(int(args.which[-1]))
    text = formula.to_text(f)
    out.emit(text, {"name": args.which, "formula": text})
    return 0


def cmd_paper_g(args, out: Output) -> int:
    m1 = papersuite.build_m1(args.k)
    if args.point not in m1.num_sort:
        raise UsageError(f"--point must be in the number sort 0..{len(m1.num_sort) - 1}")
    g = papersuite.compute_G(m1.model, beta.principal(m1.model.size, args.point))
    sets = [sorted(m1.subset_of(b)) for b in sorted(g)]
    out.emit("\n".join("{" + ",".join(map(str, s)) + "}" for s in sets), {"G": sets})
    return 0


# --- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "structured"), default="text")

    p = _Parser(prog="ufx", description="Ultrafilter extensions of first-order models.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pm = sub.add_parser("model", help="model files")
    msub = pm.add_subparsers(dest="action", required=True, parser_class=_Parser)
    x = msub.add_parser("validate", parents=[common])
    x.add_argument("file")
    x.set_defaults(run=cmd_model_validate)
    x = msub.add_parser("beta", parents=[common])
    x.add_argument("file")
    x.add_argument("--mode", choices=("literal", "fast"), default="fast")
    x.set_defaults(run=cmd_model_beta)
    x = msub.add_parser("ultrafilters", parents=[common])
    x.add_argument("file")
    x.set_defaults(run=cmd_model_ultrafilters)
    x = msub.add_parser("convert")
    x.add_argument("file")
    x.add_argument("--to", choices=("text", "json"), default="text")
    x.set_defaults(run=cmd_model_convert, format="text")
    x = msub.add_parser("classify", parents=[common])
    x.add_argument("source")
    x.add_argument("target")
    x.add_argument("--map", required=True)
    x.set_defaults(run=cmd_model_classify)

    x = sub.add_parser("eval", parents=[common], help="evaluate a formula")
    x.add_argument("model")
    x.add_argument("--formula", required=True, help="formula text or a file containing it")
    x.add_argument("--let", action="append", default=[], metavar="VAR=POINT")
    x.add_argument("--uf", action="append", default=[], metavar="NAME=principal:N")
    x.set_defaults(run=cmd_eval)

    x = sub.add_parser("lift", parents=[common], help="check the lifted map between extensions")
    x.add_argument("source")
    x.add_argument("target")
    x.add_argument("--map", required=True)
    x.add_argument("--mode", choices=("literal", "fast"), default="fast")
    x.set_defaults(run=cmd_lift)

    pu = sub.add_parser("uf", help="symbolic ultrafilter classes")
    usub = pu.add_subparsers(dest="action", required=True, parser_class=_Parser)
    x = usub.add_parser("measure", parents=[common])
    x.add_argument("--d", required=True, help="principal:N or frechet:EPSET")
    x.add_argument("--set", required=True)
    x.set_defaults(run=cmd_uf_measure)
    x = usub.add_parser("two-level", parents=[common])
    x.add_argument("--d1", required=True)
    x.add_argument("--d2", required=True)
    x.add_argument("--base", required=True, help="EPSET of the inner family")
    x.add_argument("--cut", choices=(">", "<", "none"), default="none")
    x.add_argument("--domain", help="outer domain EPSET (default: all naturals)")
    x.set_defaults(run=cmd_uf_two_level)
    x = usub.add_parser("pair-image", parents=[common])
    x.add_argument("--a1", required=True)
    x.add_argument("--a2", help="default: complement of --a1")
    x.add_argument("--order", choices=(symbolic.FIRST_LESS, symbolic.SECOND_LESS), required=True)
    x.add_argument("--d1", required=True)
    x.add_argument("--d2", required=True)
    x.add_argument("--offset", type=int, default=0, help="sort-tag offset of the Cantor code")
    x.set_defaults(run=cmd_uf_pair_image)

    x = sub.add_parser("epset", parents=[common], help="eventually periodic set algebra")
    x.add_argument("op", choices=("show", "union", "intersect", "minus", "complement", "cut"))
    x.add_argument("sets", nargs="+")
    x.add_argument("--bound", help="for cut: '>n' or '<n'")
    x.add_argument("--limit", type=int, default=20)
    x.set_defaults(run=cmd_epset)

    x = sub.add_parser("lemma3", parents=[common], help="pair-image sets of a partition")
    x.add_argument("--partition", help="EPSET A1; A2 is its complement")
    x.add_argument("--k", type=int, help="finite check in the truncated model")
    x.add_argument("--a1", help="with --k: comma separated subset of 0..k-1")
    x.set_defaults(run=cmd_lemma3)

    x = sub.add_parser("cut", parents=[common], help="cut segments of a principal ultrafilter")
    x.add_argument("--order", required=True, help="points 0..n-1 listed from least to greatest")
    x.add_argument("--at", type=int, required=True)
    x.set_defaults(run=cmd_cut)

    pp = sub.add_parser("paper", help="the counterexample apparatus")
    psub = pp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    x = psub.add_parser("suite", parents=[common])
    x.add_argument("--k", type=int, default=4)
    x.add_argument("--seed", type=int, default=None, help="default: $UFX_SEED or 0")
    x.add_argument("--mutant", choices=("asymmetric-F",))
    x.set_defaults(run=cmd_paper_suite)
    x = psub.add_parser("m1", parents=[common])
    x.add_argument("--k", type=int, default=3)
    x.set_defaults(run=cmd_paper_m1)
    x = psub.add_parser("formula", parents=[common])
    x.add_argument("which", choices=("phi1", "phi2", "psi"))
    x.set_defaults(run=cmd_paper_formula)
    x = psub.add_parser("g", parents=[common])
    x.add_argument("--k", type=int, default=3)
    x.add_argument("--point", type=int, required=True)
    x.set_defaults(run=cmd_paper_g)
    return p


_INPUT_ERRORS = (
    UsageError, model.ModelSyntaxError, model.ModelSemanticError, model.VocabularyError,
    formula.FormulaSyntaxError, formula.FormulaError, formula.EvaluationError,
    papersuite.SuiteError, ValueError, json.JSONDecodeError,
)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.run(args, Output(args.format, stdout))
    except _INPUT_ERRORS as e:
        stderr.write(f"error: {e}\n")
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
