# contagio_hipergrafo/cli.py
"""
Linha de comando do contágio SIS em hipergrafos.

Subcomandos: generate, simulate, bivirus, equilibrium, analyze, learn, compare.
Resumo legível vai para a saída padrão; JSON/CSV vão para arquivos.

Códigos de saída: 0 sucesso, 1 erro de entrada/arquivo, 2 hipótese de
modelagem violada, 3 método iterativo sem convergência.
"""
from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple
import argparse
import json
import logging
import sys

import numpy as np

from .services import analysis, dynamics, hypergraph as hg, learning, parsing, stochastic
from .services.errors import AssumptionViolation, NotConverged

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
HYPERGRAPH_FILE = "hipergrafo.json"
DEFAULT_PARAMS_FILE = "params.json"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_ASSUMPTION = 2
EXIT_NOT_CONVERGED = 3


# ---------------- cenários e entradas ----------------
def _list_scenarios() -> Dict[str, Path]:
    """Subpastas de DATA_DIR que têm hipergrafo.json."""
    if not DATA_DIR.is_dir():
        return {}
    return {p.name: p for p in sorted(DATA_DIR.iterdir()) if (p / HYPERGRAPH_FILE).is_file()}


def _resolve_inputs(args: argparse.Namespace, need_params: bool = True) -> Tuple[Path, Path | None]:
    """
    --hypergraph/--params explícitos têm prioridade; com --scenario, o
    hipergrafo vem da pasta do cenário e --params pode ser só o nome do arquivo.
    """
    hyper = getattr(args, "hypergraph", None)
    params = getattr(args, "params", None)
    scenario = getattr(args, "scenario", None)
    if scenario:
        scenarios = _list_scenarios()
        if scenario not in scenarios:
            raise ValueError(f"Cenário desconhecido: {scenario!r}; disponíveis: {sorted(scenarios)}")
        folder = scenarios[scenario]
        hyper = hyper or folder / HYPERGRAPH_FILE
        if params is None:
            if (folder / DEFAULT_PARAMS_FILE).is_file():
                params = folder / DEFAULT_PARAMS_FILE
        elif not Path(params).is_file() and (folder / params).is_file():
            params = folder / params
    if hyper is None:
        raise ValueError("Informe --hypergraph ou --scenario")
    if need_params and params is None:
        raise ValueError("Informe --params (ou um cenário com params.json)")
    return Path(hyper), (Path(params) if params is not None else None)


def _check_outputs(outputs: Iterable[Any], inputs: Iterable[Any]) -> None:
    """Saída nunca sobrescreve entrada."""
    taken = {Path(p).resolve() for p in inputs if p is not None}
    for out in outputs:
        if out is not None and Path(out).resolve() in taken:
            raise ValueError(f"Arquivo de saída coincide com uma entrada: {out}")


def _load_single(hyper_path: Path, params_path: Path) -> Tuple[hg.DirectedHypergraph, Any]:
    H = parsing.load_hypergraph(hyper_path)
    params = parsing.load_params(params_path, H)
    return H, params


def _fmt(x: Sequence[float]) -> str:
    return "[" + ", ".join(f"{v:.6f}" for v in x) + "]"


# ---------------- generate ----------------
def cmd_generate(args: argparse.Namespace) -> int:
    _check_outputs([args.out], [])
    if args.kind == "ba":
        H = hg.random_ba_hypergraph(args.n, args.m, args.triples, args.seed)
    else:
        H = hg.cycle_hypergraph(args.n, hg.consecutive_triples(args.n) if args.triples else None)
    parsing.save_hypergraph(H, args.out)
    print(
        f"Hipergrafo {args.kind}: n={H.n} arestas={len(H.edges)} ordem_max={H.max_order} "
        f"par-a-par fortemente conexo={hg.pairwise_strongly_connected(H)} -> {args.out}"
    )
    return EXIT_OK


# ---------------- simulate ----------------
def cmd_simulate(args: argparse.Namespace) -> int:
    hyper, params_path = _resolve_inputs(args)
    _check_outputs([args.out], [hyper, params_path])
    _, params = _load_single(hyper, params_path)
    if isinstance(params, dynamics.BiVirusParams):
        raise ValueError("Parâmetros bi-vírus: use o subcomando 'bivirus'")
    x0 = parsing.parse_vector(args.x0, params.n)
    traj = dynamics.simulate(params, x0, args.steps, mode=args.mode, force=args.force)
    parsing.save_trajectory(traj, args.out)
    final = traj.states[-1]
    print(f"Simulação: {traj.T} passos, h={traj.h:g}, média final={final.mean():.6f}")
    print(f"Estado final: {_fmt(final)} -> {args.out}")
    return EXIT_OK


# ---------------- bivirus ----------------
def _limit_kind(state: np.ndarray, n: int, tol: float) -> str:
    alive = (bool(state[:n].max() > tol), bool(state[n:].max() > tol))
    return {
        (False, False): "saudável",
        (True, False): "dominante vírus 1",
        (False, True): "dominante vírus 2",
        (True, True): "coexistência",
    }[alive]


def cmd_bivirus(args: argparse.Namespace) -> int:
    hyper, params_path = _resolve_inputs(args)
    _check_outputs([args.out, args.report], [hyper, params_path])
    _, params = _load_single(hyper, params_path)
    if not isinstance(params, dynamics.BiVirusParams):
        raise ValueError(f"{params_path} não tem as seções 'virus1' e 'virus2'")
    n = params.n

    if args.random:
        if args.seed is None:
            raise ValueError("--random exige --seed")
        rng = np.random.default_rng(args.seed)
        X1, X2 = dynamics.random_simplex_states(n, args.random, rng)
        res = dynamics.simulate_bivirus_batch(params, X1, X2, max_steps=args.max_steps, tol=args.tol)
        reps, labels = dynamics.cluster_limits(res.final)
        limits = []
        for c, rep in enumerate(reps):
            kind = _limit_kind(rep, n, 1e-6)
            count = int(np.sum(labels == c))
            limits.append({"kind": kind, "count": count, "virus1": rep[:n], "virus2": rep[n:]})
            print(f"Limite {c + 1} ({kind}): {count} inicializações, x1={_fmt(rep[:n])} x2={_fmt(rep[n:])}")
        not_conv = int(np.sum(~res.converged))
        print(f"{args.random} inicializações, {len(reps)} limites distintos, {not_conv} sem convergir")
        if args.out:
            parsing.save_json({"seed": args.seed, "samples": args.random, "not_converged": not_conv, "limits": limits}, args.out)
    else:
        x1 = parsing.parse_vector(args.x1, n)
        x2 = parsing.parse_vector(args.x2, n)
        traj = dynamics.simulate(params, (x1, x2), args.steps, force=args.force)
        print(f"Bi-vírus: {traj.T} passos; x1 final={_fmt(traj.states[-1])} x2 final={_fmt(traj.states2[-1])}")
        if args.out:
            parsing.save_trajectory(traj, args.out)

    if args.report:
        report = analysis.bivirus_conditions(params)
        parsing.save_json(report.to_dict(), args.report)
        rho = report.rho_reproduction
        print(f"ρ = ({rho[0]:.4f}, {rho[1]:.4f}); multiestável={report.multistable} coexistência={report.coexistence}")
    return EXIT_OK


# ---------------- equilibrium ----------------
def cmd_equilibrium(args: argparse.Namespace) -> int:
    hyper, params_path = _resolve_inputs(args)
    _check_outputs([args.out], [hyper, params_path])
    _, params = _load_single(hyper, params_path)
    if isinstance(params, dynamics.BiVirusParams):
        raise ValueError("Equilíbrios bi-vírus: use 'bivirus --report'")
    if args.init == "ones":
        init = np.ones(params.n)
    elif args.init == "omega":
        init = dynamics.omega_initial_point(params)
    else:
        init = parsing.parse_vector(args.init, params.n)
    eq = dynamics.EquilibriumParams(tol=args.tol, max_iters=args.max_iters)
    xbar = dynamics.find_equilibrium(params, init, eq)
    jac = analysis.jacobian(params, xbar)
    print(f"Equilíbrio: {_fmt(xbar)}")
    print(f"ρ(J) = {jac.rho:.6f} ({'estável' if jac.stable else 'não estável'})")
    if args.out:
        parsing.save_json(
            {"equilibrium": xbar, "healthy": bool(xbar.max() <= 1e-8), "jacobian_rho": jac.rho, "stable": jac.stable},
            args.out,
        )
    return EXIT_OK


# ---------------- analyze ----------------
def _try(name: str, fn, skipped: Dict[str, str]):
    try:
        return fn()
    except (AssumptionViolation, ValueError, NotConverged) as exc:
        logger.info("Analyze skip | item=%s motivo=%s", name, exc)
        skipped[name] = str(exc)
        return None


def _analyze_single(params: Any, args: argparse.Namespace) -> Dict[str, Any]:
    report = analysis.classify(params)
    out = report.to_dict()
    skipped: Dict[str, str] = {}
    domains: List[analysis.DomainOfAttraction] = []
    general = isinstance(params, dynamics.GeneralParams) and params.max_order > 3

    if not general:
        dom = _try("alpha1", lambda: analysis.thm1_alpha1(params), skipped)
        if dom is not None:
            domains.append(dom)
    dom = _try("p_plus_saudavel", lambda: analysis.thm5_healthy_p_plus(params), skipped)
    if dom is not None:
        domains.append(dom)

    xbar = _try("equilibrio", lambda: dynamics.find_equilibrium(params, np.ones(params.n)), skipped)
    if xbar is not None and xbar.max() > 1e-8:
        out["equilibrium"] = [float(v) for v in xbar]
        jac = analysis.jacobian(params, xbar)
        out["jacobian_rho"] = jac.rho
        if not general:
            thm2 = _try("thm2", lambda: analysis.thm2_local_endemic(params, xbar), skipped)
            if thm2 is not None:
                out["thm2"] = {"case_i": thm2.case_i, "case_ii": thm2.case_ii}
            dom = _try("alpha2", lambda: analysis.thm3_alpha2(params, xbar), skipped)
            if dom is not None:
                domains.append(dom)
        dom = _try("p_plus_endemico", lambda: analysis.thm6_endemic_p_plus(params, xbar), skipped)
        if dom is not None:
            domains.append(dom)

    out["domains"] = [d.to_dict() for d in domains]
    if args.validate:
        checks = []
        for d in domains:
            v = analysis.validate_domain(params, d, samples=args.validate, seed=args.seed)
            checks.append({"kind": d.kind, "samples": v.samples, "violations": v.violations, "max_distance": v.max_distance})
            print(f"  validação {d.kind}: {v.violations} violações em {v.samples} amostras")
        out["validation"] = checks
    out["skipped"] = skipped

    print(f"Regime: {report.classification}{' (heurístico)' if report.heuristic else ''}")
    print(f"ρ(I − h𝒟 + h𝓑) = {report.rho_reproduction:.6f}; ρ(𝒟⁻¹𝓑 + 𝒟⁻¹𝓗z) = {report.rho_prop1:.6f}")
    for c in report.conditions:
        print(f"  [{'x' if c.holds else ' '}] {c.name}")
    for d in domains:
        print(f"  domínio {d.kind} ({d.coordinates}): raio={d.radius:.6g} global={d.is_global}")
    return out


def cmd_analyze(args: argparse.Namespace) -> int:
    hyper, params_path = _resolve_inputs(args)
    _check_outputs([args.out], [hyper, params_path])
    if args.validate and args.seed is None:
        raise ValueError("--validate exige --seed")
    _, params = _load_single(hyper, params_path)
    if isinstance(params, dynamics.BiVirusParams):
        report = analysis.bivirus_conditions(params)
        out = report.to_dict()
        print(f"Bi-vírus: ρ = ({report.rho_reproduction[0]:.4f}, {report.rho_reproduction[1]:.4f})")
        for c in report.conditions:
            print(f"  [{'x' if c.holds else ' '}] {c.name}")
    else:
        out = _analyze_single(params, args)
    if args.out:
        parsing.save_json(out, args.out)
    else:
        print(json.dumps(parsing.to_jsonable(out), ensure_ascii=False, indent=2))
    return EXIT_OK


# ---------------- learn ----------------
def cmd_learn(args: argparse.Namespace) -> int:
    hyper, _ = _resolve_inputs(args, need_params=False)
    _check_outputs([args.out], [hyper, args.traj])
    H = parsing.load_hypergraph(hyper)
    traj = parsing.load_trajectory(args.traj, args.h)
    if traj.is_bivirus:
        raise ValueError("Aprendizado só para trajetórias de vírus único")
    lp = learning.LearningParams(max_order=args.max_order)
    learned, stats = learning.learn_all(traj, H, args.h, args.q, args.m, lp)
    parsing.save_learned(learned, args.h, args.out, stats)
    print(learning.learned_frame(learned).to_string(index=False))
    print(f"Posto cheio em {stats['rank_ok']}/{stats['nodes']} nós; resíduo máx {stats['max_residual']:.3e} -> {args.out}")
    return EXIT_OK


# ---------------- compare ----------------
def _compare_inputs(args: argparse.Namespace) -> List[Path]:
    if args.hypergraph or args.scenario:
        return list(_resolve_inputs(args))
    return []


def _compare_params(args: argparse.Namespace, inputs: List[Path]) -> Any:
    """Parâmetros de arquivo, ou hipergrafo BA gerado com μ ajustado para o ρ alvo."""
    if inputs:
        _, params = _load_single(inputs[0], inputs[1])
        return params
    if args.n is None or args.rho is None:
        raise ValueError("Sem --hypergraph/--scenario: informe --n e --rho para gerar a rede BA")
    graph_seed = args.seed if args.graph_seed is None else args.graph_seed
    H = hg.random_ba_hypergraph(args.n, args.m, args.triples, graph_seed)
    mu = analysis.tune_pairwise_rate(H, args.delta, args.h, args.rho)
    ones = np.ones(H.n)
    params = dynamics.build_params(H, args.delta * ones, args.h, mu * ones, args.mu3 * ones)
    print(f"BA n={H.n} m={args.m} triplas={args.triples}: μ={mu:.6g} para ρ={args.rho}")
    return params


def cmd_compare(args: argparse.Namespace) -> int:
    inputs = _compare_inputs(args)
    _check_outputs([args.out, args.marginals], inputs)
    params = _compare_params(args, inputs)
    if isinstance(params, dynamics.BiVirusParams):
        raise ValueError("Comparação estocástica só para vírus único")
    init = parsing.parse_vector(args.init, params.n)
    if args.exact:
        max_err, frame = stochastic.compare_exact(params, init, args.steps)
    else:
        mc = stochastic.MonteCarloParams(workers=args.workers)
        ens = stochastic.monte_carlo(params, init, args.steps, args.runs, args.seed, mc)
        max_err, frame = stochastic.compare_ensemble(params, init, ens)
        if args.marginals:
            parsing.save_frame(ens.to_frame(), args.marginals)
    parsing.save_frame(frame, args.out)
    rho = analysis.reproduction_number(params)
    print(f"ρ(I − h𝒟 + h𝓑) = {rho:.6f}; erro máximo da média = {max_err:.6f} -> {args.out}")
    return EXIT_OK


# ---------------- parser ----------------
def _add_inputs(p: argparse.ArgumentParser, params: bool = True) -> None:
    p.add_argument("--scenario", help="cenário em data/ (ex.: rede5, rede5_unitario, ciclo5)")
    p.add_argument("--hypergraph", help="hipergrafo JSON")
    if params:
        p.add_argument("--params", help="parâmetros JSON (ou nome do arquivo dentro do cenário)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contagio", description="Contágio SIS em hipergrafos direcionados")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v INFO, -vv DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="gera hipergrafo (BA ou ciclo)")
    gk = g.add_subparsers(dest="kind", required=True)
    ba = gk.add_parser("ba", help="Barabási–Albert + triplas aleatórias")
    ba.add_argument("--n", type=int, required=True)
    ba.add_argument("--m", type=int, required=True)
    ba.add_argument("--triples", type=int, default=0)
    ba.add_argument("--seed", type=int, required=True)
    ba.add_argument("--out", required=True)
    cy = gk.add_parser("cycle", help="ciclo dirigido (opcionalmente com triplas consecutivas)")
    cy.add_argument("--n", type=int, required=True)
    cy.add_argument("--triples", action="store_true", help="uma tripla por cauda: i ← {i+1, i+2}")
    cy.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="trajetória de campo médio")
    _add_inputs(s)
    s.add_argument("--x0", required=True, help="valor único ou n valores separados por vírgula")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--mode", choices=["A3a", "A3b"], default="A3a")
    s.add_argument("--force", action="store_true", help="simula mesmo com hipótese de passo violada")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bivirus", help="dinâmica bi-vírus")
    _add_inputs(b)
    b.add_argument("--x1", default="0.3")
    b.add_argument("--x2", default="0.3")
    b.add_argument("--steps", type=int, default=1000)
    b.add_argument("--random", type=int, default=0, help="número de inicializações aleatórias no simplex")
    b.add_argument("--seed", type=int)
    b.add_argument("--max-steps", type=int, default=1_000_000)
    b.add_argument("--tol", type=float, default=1e-8)
    b.add_argument("--force", action="store_true")
    b.add_argument("--out")
    b.add_argument("--report", help="JSON com as condições bi-vírus")
    b.set_defaults(func=cmd_bivirus)

    e = sub.add_parser("equilibrium", help="ponto fixo a partir de um estado inicial")
    _add_inputs(e)
    e.add_argument("--init", default="ones", help="'ones', 'omega' ou vetor")
    e.add_argument("--tol", type=float, default=1e-12)
    e.add_argument("--max-iters", type=int, default=1_000_000)
    e.add_argument("--out")
    e.set_defaults(func=cmd_equilibrium)

    a = sub.add_parser("analyze", help="classificação de regime e domínios de atração")
    _add_inputs(a)
    a.add_argument("--validate", type=int, default=0, help="amostras para validar cada domínio")
    a.add_argument("--seed", type=int)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    le = sub.add_parser("learn", help="estima δ, μ, μ₃ por nó a partir de uma trajetória")
    _add_inputs(le, params=False)
    le.add_argument("--traj", required=True)
    le.add_argument("--h", type=float, required=True)
    le.add_argument("--q", type=int, default=0)
    le.add_argument("--m", type=int)
    le.add_argument("--max-order", type=int)
    le.add_argument("--out", required=True)
    le.set_defaults(func=cmd_learn)

    c = sub.add_parser("compare", help="campo médio contra Monte Carlo ou cadeia exata")
    _add_inputs(c)
    c.add_argument("--n", type=int, help="nós da rede BA gerada")
    c.add_argument("--m", type=int, default=3)
    c.add_argument("--triples", type=int, default=10_000)
    c.add_argument("--graph-seed", type=int)
    c.add_argument("--delta", type=float, default=0.5)
    c.add_argument("--h", type=float, default=0.1)
    c.add_argument("--rho", type=float, help="ρ(I − h𝒟 + h𝓑) alvo")
    c.add_argument("--mu3", type=float, default=0.0)
    c.add_argument("--init", default=str(1 / 3))
    c.add_argument("--steps", type=int, default=1000)
    c.add_argument("--runs", type=int, default=5000)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--workers", type=int)
    c.add_argument("--exact", action="store_true", help="usa a cadeia exata (n pequeno) em vez de Monte Carlo")
    c.add_argument("--out", required=True)
    c.add_argument("--marginals", help="CSV com as marginais por nó do Monte Carlo")
    c.set_defaults(func=cmd_compare)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else (logging.INFO if verbosity == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except AssumptionViolation as exc:
        print(f"Hipótese violada: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except NotConverged as exc:
        print(f"Sem convergência: {exc} (resíduo {exc.residual:.3e})", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (ValueError, OSError) as exc:
        print(f"Erro: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
