## @file symbols.py
## @brief Scenario-file keys, builtins and bare words with documentation.

from dataclasses import dataclass, field


@dataclass
class KeyInfo:
    name: str
    doc: str
    indexed: bool = False
    required: bool = False
    snippet: str = ""


@dataclass
class BuiltinInfo:
    name: str
    doc: str
    params: list[str] = field(default_factory=list)
    return_type: str = ""


KEYS: list[KeyInfo] = [
    KeyInfo("name", "Scenario label used in reports.", snippet='name = "${1:label}"'),
    KeyInfo("agents", "Number of agents N.", required=True, snippet="agents = ${1:3}"),
    KeyInfo("A", "n×n system matrix of x_{k+1} = A x_k + B w_k.", required=True,
            snippet="A = ${1:eye(2)}"),
    KeyInfo("B", "n×p process-noise input matrix.", required=True, snippet="B = ${1:eye(2)}"),
    KeyInfo("C", "Output matrix of agent i: y^i = C^i x + D^i v^i.", indexed=True, required=True,
            snippet="C[${1:0}] = [[${2:1, 0}]]"),
    KeyInfo("D", "Measurement-noise map of agent i. Defaults to the identity.", indexed=True,
            snippet="D[${1:0}] = [[${2:1}]]"),
    KeyInfo("graph", "Communication graph: complete(N), directed_ring(N) or edges(N, [[i, j], ...]).",
            required=True, snippet="graph = ${1:complete(3)}"),
    KeyInfo("x0", "True initial state. Sampled inside the initial bounds when absent."),
    KeyInfo("x0_lower", "Lower initial bound."),
    KeyInfo("x0_upper", "Upper initial bound."),
    KeyInfo("x0_margin", "Initial bounds x0 ± margin when explicit bounds are absent."),
    KeyInfo("w_lower", "Lower process-noise bound.", required=True),
    KeyInfo("w_upper", "Upper process-noise bound.", required=True),
    KeyInfo("v_lower", "Lower measurement-noise bound of agent i.", indexed=True, required=True),
    KeyInfo("v_upper", "Upper measurement-noise bound of agent i.", indexed=True, required=True),
    KeyInfo("w", "Process-noise realization: uniform, zero or a list of noise terms. Default uniform."),
    KeyInfo("v", "Measurement-noise realization of agent i. Default uniform.", indexed=True),
    KeyInfo("horizon", "Number of simulated steps K.", required=True, snippet="horizon = ${1:200}"),
    KeyInfo("rounds", "Network rounds d per step, or auto for the CPDN value d*. Default auto."),
    KeyInfo("seed", "Seed of the uniform noise generator. Default 0."),
]

KEY_MAP: dict[str, KeyInfo] = {k.name: k for k in KEYS}
KEY_NAMES: set[str] = {k.name for k in KEYS}
INDEXED_KEYS: set[str] = {k.name for k in KEYS if k.indexed}

BUILTINS: list[BuiltinInfo] = [
    BuiltinInfo("eye", "Identity matrix.", ["n"], "matrix"),
    BuiltinInfo("zeros", "Zero vector, or zero matrix when two sizes are given.", ["rows", "cols?"], "matrix"),
    BuiltinInfo("ones", "Vector of ones.", ["n"], "vector"),
    BuiltinInfo("unit", "Unit vector e_i of length n (0-based i).", ["n", "i"], "vector"),
    BuiltinInfo("diag", "Diagonal matrix from a vector.", ["values"], "matrix"),
    BuiltinInfo("kron", "Kronecker product. The right factor may be a list of noise terms.",
                ["left", "right"], "matrix"),
    BuiltinInfo("complete", "Fully connected graph on N nodes.", ["N"], "graph"),
    BuiltinInfo("directed_ring", "Ring with edges (i, i+1 mod N).", ["N"], "graph"),
    BuiltinInfo("edges", "Graph from an explicit edge list; (i, j) lets i read j.", ["N", "pairs"], "graph"),
    BuiltinInfo("sin", "Noise term a·sin(f·k + p).", ["a", "f", "p?"], "noise"),
    BuiltinInfo("cos", "Noise term a·cos(f·k + p).", ["a", "f", "p?"], "noise"),
    BuiltinInfo("sin2", "Noise term a·sin²(f·k + p).", ["a", "f", "p?"], "noise"),
    BuiltinInfo("const", "Constant noise term a.", ["a"], "noise"),
]

BUILTIN_MAP: dict[str, BuiltinInfo] = {b.name: b for b in BUILTINS}
BUILTIN_NAMES: set[str] = {b.name for b in BUILTINS}

WORDS: dict[str, str] = {
    "uniform": "seeded uniform sampling inside the declared bounds",
    "zero": "identically zero noise (0 must lie inside the bounds)",
    "auto": "rounds d = d* from the CPDN initialization",
}
WORD_NAMES: set[str] = set(WORDS)
