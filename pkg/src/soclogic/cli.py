"""Command-line entry point.

Subcommands: ground, infer, learn, extract, synth, eval.  Exit codes:
0 success, 1 usage error, 2 data error, 3 infeasible or solver error.
Every run is deterministic given --seed; --threads changes wall time only.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import baselines, extract, fileio, harness, mln, psl, schema
from .fileio import DataError
from .logic import (GroundAtom, GroundingError, InfeasibleError,
                    KnowledgeBase, LogicError, ground)
from .mln import MlnConfig, TooManyFreeAtoms
from .psl import PslConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model_args(p, rules_required=True):
    p.add_argument("--schema", required=True, help="predicate schema file")
    p.add_argument("--rules", required=rules_required, help="rule file")
    p.add_argument("--evidence", help="evidence file")
    p.add_argument("--categories", help="entity category file")
    p.add_argument("--no-cutoff", action="store_true",
                   help="disable the entity-category cut-off")
    p.add_argument("--prune", action="store_true",
                   help="prune satisfied evidence-only ground rules")


def _add_sampler_args(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--method", choices=("auto", "exact", "gibbs"),
                   default="auto")


def build_parser() -> _Parser:
    parser = _Parser(prog="soclogic", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground", help="ground rules and print program stats")
    _add_model_args(p)
    p.add_argument("--output", help="write stats here instead of stdout")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("infer", help="marginals (mln) or MPE values (psl)")
    _add_model_args(p)
    p.add_argument("--engine", choices=("mln", "psl"), required=True)
    p.add_argument("--query", help="comma-separated query predicates")
    p.add_argument("--output", required=True)
    _add_sampler_args(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("learn", help="discriminative or EM weight learning")
    _add_model_args(p)
    p.add_argument("--mode", choices=("discriminative", "em"),
                   default="discriminative")
    p.add_argument("--query", help="query predicates (discriminative)")
    p.add_argument("--latent", help="latent predicates (em)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--learn-rate", type=float, default=0.05)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--weight-cap", type=float, default=10.0)
    p.add_argument("--em-rounds", type=int, default=10)
    p.add_argument("--output", required=True, help="updated rule file")
    _add_sampler_args(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("extract", help="run evidence extractors over raw feeds")
    p.add_argument("--geo", help="geo events file (user, state, YYYY-MM)")
    p.add_argument("--follow", help="follow edge file")
    p.add_argument("--names", help="name gender-count table")
    p.add_argument("--user-names", help="user to first-name map file")
    p.add_argument("--spouse", help="spouse score file")
    p.add_argument("--output", required=True, help="evidence output file")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("synth", help="generate a synthetic network dataset")
    p.add_argument("--users", type=int, default=100)
    p.add_argument("--density", type=float, default=0.04)
    p.add_argument("--category", action="append", default=None,
                   help="category label (repeatable; default sports,food)")
    p.add_argument("--rule", action="append", default=None,
                   help="planted rule text (repeatable)")
    p.add_argument("--s-mention", type=float, default=0.3)
    p.add_argument("--burn-sweeps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="friend-observed / friend-latent report")
    _add_model_args(p)
    p.add_argument("--engine", choices=("mln", "psl"), required=True)
    p.add_argument("--setting", choices=("observed", "latent"),
                   default="observed")
    p.add_argument("--targets", default="Like",
                   help="comma-separated target predicates")
    p.add_argument("--max-targets", type=int, default=0,
                   help="cap on observed-setting targets (0 = all)")
    p.add_argument("--hidden-fraction", type=float, default=0.3)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--ratios", action="store_true",
                   help="include per-rule conditional ratios")
    p.add_argument("--output", help="report file (default stdout)")
    _add_sampler_args(p)
    p.set_defaults(func=cmd_eval)

    return parser


# ---------------------------------------------------------------------------
# Model loading helpers
# ---------------------------------------------------------------------------

def _require(path, what):
    if path and not os.path.exists(path):
        raise DataError(f"{what} file not found: {path}")


def _load_model(args):
    _require(args.schema, "schema")
    _require(args.rules, "rules")
    _require(args.evidence, "evidence")
    _require(args.categories, "categories")
    kb = fileio.load_schema(args.schema)
    if args.categories:
        for entity, label in sorted(fileio.load_categories(args.categories).items()):
            kb.add_constant(entity, kb.entity_sort)
            kb.set_category(entity, label)
    if args.rules:
        fileio.load_rules(args.rules, kb)
    evidence = {}
    if args.evidence:
        evidence = fileio.load_evidence(args.evidence, kb)
    return kb, evidence


def _mln_config(args) -> MlnConfig:
    cfg = MlnConfig(seed=args.seed, samples=args.samples,
                    burn_in=args.burn_in, chains=args.chains,
                    method=args.method)
    for attr in ("epochs", "l2", "weight_cap"):
        if hasattr(args, attr.replace("-", "_")):
            cfg = replace(cfg, **{attr: getattr(args, attr)})
    if hasattr(args, "learn_rate"):
        cfg = replace(cfg, learn_rate=args.learn_rate)
    return cfg


def _preds_by_role(kb: KnowledgeBase, role: str):
    return tuple(sorted(n for n, s in kb.schemas.items() if s.role == role))


def _split_preds(text):
    return tuple(p.strip() for p in text.split(",") if p.strip()) if text else ()


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_ground(args) -> int:
    kb, evidence = _load_model(args)
    program = ground(kb, evidence, cutoff=not args.no_cutoff,
                     prune_satisfied=args.prune)
    n_hard = sum(1 for r in program.rules if r.is_hard)
    lines = [
        ("atoms", program.n_atoms),
        ("ground_rules", len(program.rules)),
        ("hard_rules", n_hard),
        ("soft_rules", len(program.rules) - n_hard),
        ("evidence_atoms", len(program.evidence)),
        ("free_atoms", len(program.free_atom_ids())),
    ]
    _emit(args.output, lines)
    return EXIT_OK


def cmd_infer(args) -> int:
    kb, evidence = _load_model(args)
    program = ground(kb, evidence, cutoff=not args.no_cutoff,
                     prune_satisfied=args.prune)
    query_preds = _split_preds(args.query) or _preds_by_role(kb, "query")
    query_ids = [i for i, a in enumerate(program.atoms)
                 if a.pred in set(query_preds) and i not in program.evidence]
    if args.engine == "mln":
        config = _mln_config(args)
        atoms = [program.atoms[i] for i in query_ids]
        use_exact = (args.method == "exact" or (
            args.method == "auto"
            and len(program.free_atom_ids()) <= config.max_exact_atoms))
        if use_exact:
            result = mln.exact_query(program, atoms, config)
        else:
            result = mln.gibbs_query(program, atoms, config)
    else:
        interp = psl.mpe_infer(program, PslConfig(seed=args.seed))
        values = psl.soft_marginal_report(program, interp)
        result = {program.atoms[i]: values[program.atoms[i]] for i in query_ids}
    fileio.save_evidence(args.output, result)
    return EXIT_OK


def cmd_learn(args) -> int:
    kb, evidence = _load_model(args)
    config = _mln_config(args)
    if args.mode == "discriminative":
        query_preds = _split_preds(args.query) or _preds_by_role(kb, "query")
        if not query_preds:
            raise UsageError("discriminative learning needs --query predicates")
        network_ev = {a: v for a, v in evidence.items()
                      if a.pred not in set(query_preds)}
        program = ground(kb, network_ev, cutoff=not args.no_cutoff,
                         prune_satisfied=args.prune,
                         open_predicates=query_preds)
        world = {i: 1.0 if evidence.get(a, 0.0) >= 0.5 else 0.0
                 for i, a in enumerate(program.atoms)}
        weights = mln.learn_discriminative([(program, world)], query_preds,
                                           config)
    else:
        latent_preds = _split_preds(args.latent) or _preds_by_role(kb, "latent")
        if not latent_preds:
            raise UsageError("EM learning needs --latent predicates")
        observed = {a: v for a, v in evidence.items()
                    if a.pred not in set(latent_preds)}
        program = ground(kb, observed, cutoff=not args.no_cutoff,
                         prune_satisfied=args.prune,
                         open_predicates=latent_preds)
        weights, mention = mln.em_learn_latent(
            program, latent_preds, config, max_rounds=args.em_rounds)
        for cat in sorted(mention.report_prob):
            print(f"S[{cat}]\t{mention.report_prob[cat]:.6g}")
    updated = mln.apply_weights(kb.rules, weights)
    fileio.save_rules(args.output, updated, kb)
    return EXIT_OK


def cmd_extract(args) -> int:
    for path, what in ((args.geo, "geo"), (args.follow, "follow"),
                       (args.names, "names"), (args.user_names, "user names"),
                       (args.spouse, "spouse")):
        _require(path, what)
    evidence: dict[GroundAtom, float] = {}
    if args.geo:
        events = fileio.load_geo_events(args.geo)
        by_user: dict[str, list] = {}
        for user, state, key in events:
            by_user.setdefault(user, []).append((user, state, key))
        for user in sorted(by_user):
            state = extract.infer_location(by_user[user])
            if state is not None:
                evidence[GroundAtom("LiveIn", (user, state))] = 1.0
    if args.names and args.user_names:
        table = extract.NameGenderTable(fileio.load_name_table(args.names))
        for user, first in sorted(fileio._split_tsv(args.user_names, 2)):
            gender = extract.infer_gender(first, table)
            if gender is not None:
                evidence[GroundAtom(gender, (user,))] = 1.0
    if args.spouse:
        for a, b, score in fileio.load_spouse_scores(args.spouse):
            conf = extract.spouse_confidence(score)
            if conf is not None:
                evidence[GroundAtom("Spouse", (a, b))] = conf
                evidence[GroundAtom("Spouse", (b, a))] = conf
    if args.follow:
        edges = fileio.load_follow_edges(args.follow)
        friends, likes = extract.derive_network_atoms(edges)
        for a, b in friends:
            evidence[GroundAtom("Friend", (a, b))] = 1.0
            evidence[GroundAtom("Friend", (b, a))] = 1.0
        for user, celeb in likes:
            evidence[GroundAtom("Like", (user, celeb))] = 1.0
    fileio.save_evidence(args.output, evidence)
    return EXIT_OK


def cmd_synth(args) -> int:
    categories = tuple(args.category) if args.category else ("sports", "food")
    rules = tuple(args.rule) if args.rule else (
        "-1.0: => Like(u,e)",
        "1.0: Friend(a,b) & Like(a,e) => Like(b,e)",
    )
    params = harness.SynthParams(
        users=args.users, density=args.density, categories=categories,
        rules=rules, s_mention=args.s_mention, seed=args.seed,
        burn_sweeps=args.burn_sweeps)
    kb = schema.default_schema(query=("Like", "Dislike"))
    graph, gold = harness.synth_generate(params, kb)
    os.makedirs(args.out_dir, exist_ok=True)
    fileio.save_schema(os.path.join(args.out_dir, "schema.txt"), kb)
    fileio.save_rules(os.path.join(args.out_dir, "rules.txt"), kb.rules, kb)
    fileio.save_evidence(os.path.join(args.out_dir, "evidence.txt"),
                         graph.evidence)
    fileio.save_categories(os.path.join(args.out_dir, "categories.txt"),
                           graph.entities)
    fileio.save_evidence(os.path.join(args.out_dir, "gold.txt"),
                         {a: (1.0 if v else 0.0) for a, v in gold.items()})
    return EXIT_OK


def cmd_eval(args) -> int:
    kb, evidence = _load_model(args)
    target_preds = _split_preds(args.targets)
    graph_users = sorted({a.args[0] for a in evidence
                          if kb.schema(a.pred).arg_types[0] == "User"}
                         | {a.args[1] for a in evidence
                            if len(a.args) > 1
                            and kb.schema(a.pred).arg_types[1] == "User"})
    graph = schema.SocialGraph(
        users=graph_users,
        entities=dict(kb.entity_category_map),
        follow_edges=[],
        evidence=evidence)
    if args.engine == "mln":
        engine = harness.MlnEngine(_mln_config(args))
    else:
        engine = harness.PslEngine(PslConfig(seed=args.seed))
        kb.rules = psl.transfer_rules(kb.rules)
    program = harness.build_program(kb, graph, target_preds, prune=True)

    if args.setting == "observed":
        targets = [a for a in program.atoms if a.pred in set(target_preds)]
        if args.max_targets and len(targets) > args.max_targets:
            rng = np.random.default_rng(np.random.SeedSequence([args.seed, 55]))
            idx = sorted(rng.choice(len(targets), size=args.max_targets,
                                    replace=False).tolist())
            targets = [targets[i] for i in idx]
        report = harness.friend_observed_eval(
            graph, kb, engine, targets, program=program,
            threads=args.threads, seed=args.seed)
    else:
        report = harness.friend_latent_eval(
            graph, kb, engine, args.hidden_fraction, rounds=args.rounds,
            seed=args.seed, target_predicates=target_preds, program=program,
            threads=args.threads)
    if args.ratios:
        report.rule_ratios = harness.rule_probability_report(
            graph, kb, engine, program=program,
            target_predicates=target_preds, seed=args.seed)
    _emit(args.output, report.to_lines())
    return EXIT_OK


def _emit(output, lines):
    if output:
        fileio.save_report(output, lines)
    else:
        for key, value in lines:
            print(f"{key}\t{value}")


# ---------------------------------------------------------------------------

def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (InfeasibleError, TooManyFreeAtoms) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (DataError, GroundingError, LogicError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
