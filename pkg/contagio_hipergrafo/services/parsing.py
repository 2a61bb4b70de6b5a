# contagio_hipergrafo/services/parsing.py
"""
Leitura e escrita de todos os formatos de arquivo do projeto.

Índices são 1-based nos arquivos e 0-based dentro do pacote; a conversão
acontece só aqui.
"""
from __future__ import annotations
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple
import json
import logging
import math

import numpy as np
import pandas as pd

from .dynamics import BiVirusParams, GeneralParams, SisParams, Trajectory, build_params
from .hypergraph import DirectedHypergraph, HyperEdge
from .learning import LearnedParams

__all__ = [
    "CSV_FLOAT_FORMAT",
    "hypergraph_to_dict",
    "hypergraph_from_dict",
    "load_hypergraph",
    "save_hypergraph",
    "params_from_dict",
    "load_params",
    "load_bivirus_params",
    "parse_vector",
    "save_trajectory",
    "load_trajectory",
    "save_frame",
    "learned_to_dict",
    "save_learned",
    "to_jsonable",
    "save_json",
]

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"      # 17 dígitos significativos: double sem perda


# ----------------- utils -----------------
def _read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"JSON inválido em {path}: {exc}") from exc


def _float_list(value: Any, name: str, n: int | None = None) -> List[float]:
    if not isinstance(value, (list, tuple)):
        raise ValueError(f"Campo '{name}' deve ser uma lista de números: {value!r}")
    try:
        out = [float(v) for v in value]
    except (TypeError, ValueError) as exc:
        raise ValueError(f"Campo '{name}' com valor não numérico: {value!r}") from exc
    if n is not None and len(out) != n:
        raise ValueError(f"Campo '{name}' com {len(out)} valores; esperado {n}")
    return out


def _require_keys(data: Mapping[str, Any], keys: Sequence[str], what: str) -> None:
    if not isinstance(data, Mapping):
        raise ValueError(f"{what}: esperado objeto JSON, recebeu {type(data).__name__}")
    missing = [k for k in keys if k not in data]
    if missing:
        raise ValueError(f"{what} sem campos obrigatórios: {missing}")


def to_jsonable(obj: Any) -> Any:
    """Converte numpy/NaN/inf para tipos JSON estritos (não finito vira null)."""
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def save_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    logger.debug("JSON gravado | path=%s", path)
    return path


# ----------------- HIPERGRAFO -----------------
def hypergraph_to_dict(H: DirectedHypergraph) -> Dict[str, Any]:
    return {
        "n": H.n,
        "edges": [
            {"tail": e.tail + 1, "heads": [h + 1 for h in e.heads], "weight": e.weight}
            for e in H.edges
        ],
    }


def hypergraph_from_dict(data: Mapping[str, Any]) -> DirectedHypergraph:
    """
    Formato {"n": int, "edges": [{"tail", "heads", "weight"}]} com índices 1-based.
    'weight' ausente vale 1.
    """
    _require_keys(data, ["n", "edges"], "Hipergrafo")
    n = data["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ValueError(f"Campo 'n' deve ser inteiro: {n!r}")
    edges: List[HyperEdge] = []
    for pos, item in enumerate(data["edges"]):
        _require_keys(item, ["tail", "heads"], f"Aresta #{pos + 1}")
        heads = item["heads"]
        if not isinstance(heads, (list, tuple)):
            raise ValueError(f"Aresta #{pos + 1}: 'heads' deve ser lista: {heads!r}")
        edges.append(HyperEdge(int(item["tail"]) - 1, tuple(int(h) - 1 for h in heads), float(item.get("weight", 1.0))))
    return DirectedHypergraph(n, tuple(edges))


def load_hypergraph(path: str | Path) -> DirectedHypergraph:
    H = hypergraph_from_dict(_read_json(path))
    logger.info("Hipergrafo lido | path=%s n=%d arestas=%d", path, H.n, len(H.edges))
    return H


def save_hypergraph(H: DirectedHypergraph, path: str | Path) -> Path:
    return save_json(hypergraph_to_dict(H), path)


# ----------------- PARÂMETROS -----------------
def _virus_from_dict(data: Mapping[str, Any], hypergraph: DirectedHypergraph, h: float, what: str) -> SisParams | GeneralParams:
    _require_keys(data, ["delta", "mu2"], what)
    n = hypergraph.n
    muK = {int(k): _float_list(v, f"muK[{k}]", n) for k, v in (data.get("muK") or {}).items()}
    mu3 = data.get("mu3")
    return build_params(
        hypergraph,
        _float_list(data["delta"], "delta", n),
        h,
        _float_list(data["mu2"], "mu2", n),
        None if mu3 is None else _float_list(mu3, "mu3", n),
        muK or None,
    )


def params_from_dict(data: Mapping[str, Any], hypergraph: DirectedHypergraph) -> SisParams | GeneralParams | BiVirusParams:
    """
    Vírus único: {"delta", "h", "mu2", "mu3", "muK": {"4": [...]}}.
    Bi-vírus: {"h", "virus1": {...}, "virus2": {...}}; 'h' pode vir dentro de cada vírus.
    Campos extras (ex.: diagnósticos de um arquivo aprendido) são ignorados.
    """
    if not isinstance(data, Mapping):
        raise ValueError(f"Parâmetros: esperado objeto JSON, recebeu {type(data).__name__}")
    if "virus1" in data or "virus2" in data:
        _require_keys(data, ["virus1", "virus2"], "Parâmetros bi-vírus")
        viruses = []
        for key in ("virus1", "virus2"):
            section = data[key]
            h = section.get("h", data.get("h")) if isinstance(section, Mapping) else None
            if h is None:
                raise ValueError(f"Parâmetros bi-vírus sem 'h' (nem no topo nem em '{key}')")
            p = _virus_from_dict(section, hypergraph, float(h), key)
            if isinstance(p, GeneralParams):
                raise ValueError(f"Bi-vírus aceita até ordem 3; '{key}' tem ordem {p.max_order}")
            viruses.append(p)
        return BiVirusParams(*viruses)
    _require_keys(data, ["h"], "Parâmetros")
    return _virus_from_dict(data, hypergraph, float(data["h"]), "Parâmetros")


def load_params(path: str | Path, hypergraph: DirectedHypergraph) -> SisParams | GeneralParams | BiVirusParams:
    params = params_from_dict(_read_json(path), hypergraph)
    logger.info("Parâmetros lidos | path=%s tipo=%s", path, type(params).__name__)
    return params


def load_bivirus_params(path: str | Path, hypergraph: DirectedHypergraph) -> BiVirusParams:
    params = load_params(path, hypergraph)
    if not isinstance(params, BiVirusParams):
        raise ValueError(f"{path} não tem as seções 'virus1' e 'virus2'")
    return params


def parse_vector(text: str, n: int) -> np.ndarray:
    """
    Estado inicial na linha de comando: um número (repetido em todos os nós)
    ou n números separados por vírgula.
    """
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ValueError(f"Vetor inválido: {text!r}") from exc
    if len(values) == 1:
        return np.full(n, values[0])
    if len(values) != n:
        raise ValueError(f"Vetor com {len(values)} valores; esperado 1 ou {n}")
    return np.array(values)


# ----------------- TRAJETÓRIA -----------------
def save_frame(df: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
    logger.debug("CSV gravado | path=%s linhas=%d", path, len(df))
    return path


def save_trajectory(traj: Trajectory, path: str | Path) -> Path:
    return save_frame(traj.to_frame(), path)


def _state_columns(columns: Sequence[str], prefix: str) -> List[str]:
    cols = [c for c in columns if c.startswith(prefix) and c[len(prefix):].isdigit()]
    expected = [f"{prefix}{i}" for i in range(1, len(cols) + 1)]
    if not cols or cols != expected:
        raise ValueError(f"Colunas de estado fora do padrão {prefix}1..{prefix}n: {list(columns)}")
    return cols


def load_trajectory(path: str | Path, h: float) -> Trajectory:
    """Cabeçalho t,x1..xn (ou t,v1_x1..,v2_x1..); 't' deve ser 0,1,2,…"""
    df = pd.read_csv(path, float_precision="round_trip")
    if "t" not in df.columns:
        raise ValueError(f"Trajetória sem coluna 't': {list(df.columns)}")
    if len(df) < 1 or not np.array_equal(df["t"].to_numpy(), np.arange(len(df))):
        raise ValueError(f"Coluna 't' deve ser 0..{len(df) - 1} sem lacunas")
    if any(c.startswith("v1_") for c in df.columns):
        s1 = df[_state_columns(df.columns, "v1_x")].to_numpy(dtype=float)
        s2 = df[_state_columns(df.columns, "v2_x")].to_numpy(dtype=float)
        if s1.shape != s2.shape:
            raise ValueError("Trajetória bi-vírus com números de nós diferentes por vírus")
        return Trajectory(float(h), s1, s2)
    states = df[_state_columns(df.columns, "x")].to_numpy(dtype=float)
    logger.info("Trajetória lida | path=%s passos=%d n=%d", path, len(states) - 1, states.shape[1])
    return Trajectory(float(h), states)


# ----------------- PARÂMETROS APRENDIDOS -----------------
def learned_to_dict(learned: Sequence[LearnedParams], h: float, stats: Mapping[str, Any] | None = None) -> Dict[str, Any]:
    """
    Mesmo esquema do arquivo de parâmetros (delta, h, mu2, mu3, muK) mais
    'diagnostics' por nó; pode ser relido por load_params.
    """
    ordered = sorted(learned, key=lambda p: p.node)
    columns: Tuple[str, ...] = ordered[0].columns if ordered else ("delta", "mu2", "mu3")
    out: Dict[str, Any] = {"h": float(h)}
    muK: Dict[str, List[float]] = {}
    for name in columns:
        values = [p.value(name) for p in ordered]
        order = int(name[2:]) if name.startswith("mu") else None
        if order is not None and order >= 4:
            muK[str(order)] = values
        else:
            out[name] = values
    if muK:
        out["muK"] = muK
    out["diagnostics"] = {
        "residual": [p.residual for p in ordered],
        "rank_ok": [p.rank_ok for p in ordered],
        "kkt_residual": [p.kkt_residual for p in ordered],
        "flags": [p.flags for p in ordered],
        "error": [p.error for p in ordered],
    }
    if stats is not None:
        out["summary"] = dict(stats)
    return out


def save_learned(learned: Sequence[LearnedParams], h: float, path: str | Path, stats: Mapping[str, Any] | None = None) -> Path:
    return save_json(learned_to_dict(learned, h, stats), path)
