"""
2D straight-line programs (optionally run-length): representation,
validation, expansion, grammar trees, exact smallest-grammar search and the
explicit grammars for the identity-free families (E_k, B_k, all-zeros).
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Set, Tuple, Union

import numpy as np

from repet2d import config
from repet2d.core2d import Matrix2D, WorkBudget, window_labels
from repet2d.errors import (
    BadParam,
    BudgetExceeded,
    CycleDetected,
    DanglingVariable,
    DimMismatch,
    DuplicateRHS,
    ParseError,
    TooLarge,
)
from repet2d.families import debruijn_word

logger = logging.getLogger(__name__)

TERM, HORIZ, VERT, RUN_H, RUN_V = 'term', 'h', 'v', 'rh', 'rv'
BINARY_KINDS = (HORIZ, VERT)
RUN_KINDS = (RUN_H, RUN_V)


@dataclass(frozen=True)
class Rule2D:
    kind: str
    children: Tuple[str, ...] = ()
    symbol: Optional[str] = None
    count: int = 1

    @property
    def size(self) -> int:
        return 1 if self.kind == TERM else 2

    def text(self) -> str:
        if self.kind == TERM:
            return f"term {self.symbol}"
        if self.kind in RUN_KINDS:
            return f"{self.kind} {self.count} {self.children[0]}"
        return f"{self.kind} {self.children[0]} {self.children[1]}"


def Terminal(symbol: str) -> Rule2D:
    return Rule2D(TERM, (), str(symbol))


def Horiz(left: str, right: str) -> Rule2D:
    return Rule2D(HORIZ, (left, right))


def Vert(up: str, down: str) -> Rule2D:
    return Rule2D(VERT, (up, down))


def RunH(count: int, var: str) -> Rule2D:
    return Rule2D(RUN_H, (var,), None, int(count))


def RunV(count: int, var: str) -> Rule2D:
    return Rule2D(RUN_V, (var,), None, int(count))


@dataclass(frozen=True)
class Grammar2D:
    rules: Tuple[Tuple[str, Rule2D], ...]
    axiom: str

    @classmethod
    def of(cls, rules: Union[Mapping[str, Rule2D], Iterable[Tuple[str, Rule2D]]], axiom: str) -> 'Grammar2D':
        items = tuple(rules.items()) if isinstance(rules, Mapping) else tuple(rules)
        return cls(items, axiom)

    @property
    def variables(self) -> Dict[str, Rule2D]:
        return dict(self.rules)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.rules]

    @property
    def is_runlength(self) -> bool:
        return any(rule.kind in RUN_KINDS for _, rule in self.rules)

    @property
    def size(self) -> int:
        return sum(rule.size for _, rule in self.rules)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Grammar2D):
            return NotImplemented
        return self.axiom == other.axiom and self.variables == other.variables

    def __hash__(self) -> int:
        return hash((self.axiom, frozenset(self.variables.items())))


class GrammarInfo(NamedTuple):
    dims: Dict[str, Tuple[int, int]]
    size: int
    order: List[str]


def _topological(G: Grammar2D) -> List[str]:
    variables = G.variables
    if len(variables) != len(G.rules):
        seen = set()
        for name, _ in G.rules:
            if name in seen:
                raise BadParam(f"variable {name} defined twice", rule=name)
            seen.add(name)
    if G.axiom not in variables:
        raise DanglingVariable(f"axiom {G.axiom} has no rule", rule=G.axiom)
    for name, rule in G.rules:
        for child in rule.children:
            if child not in variables:
                raise DanglingVariable(f"rule {name} references undefined variable {child}", rule=name, missing=child)
    state: Dict[str, int] = {}
    order: List[str] = []
    for root, _ in G.rules:
        if root in state:
            continue
        stack = [(root, 0)]
        state[root] = 1
        while stack:
            name, idx = stack[-1]
            children = variables[name].children
            if idx < len(children):
                stack[-1] = (name, idx + 1)
                child = children[idx]
                mark = state.get(child, 0)
                if mark == 1:
                    raise CycleDetected(f"variable {child} derives itself (via {name})", rule=name, variable=child)
                if mark == 0:
                    state[child] = 1
                    stack.append((child, 0))
            else:
                state[name] = 2
                order.append(name)
                stack.pop()
    return order


def validate(G: Grammar2D) -> GrammarInfo:
    '''
    Check references, acyclicity, dimension consistency and distinct right-hand
    sides; compute the dimensions of every variable bottom-up.
    Returns: GrammarInfo(dims, size, children-first order)
    '''
    order = _topological(G)
    variables = G.variables
    seen_rhs: Dict[Rule2D, str] = {}
    for name, rule in G.rules:
        if rule in seen_rhs:
            raise DuplicateRHS(f"variables {seen_rhs[rule]} and {name} share the right-hand side '{rule.text()}'",
                               rule=name, other=seen_rhs[rule])
        seen_rhs[rule] = name
        if rule.kind in RUN_KINDS and rule.count < 2:
            raise BadParam(f"run-length rule {name} needs a count >= 2, got {rule.count}", rule=name)
        if rule.kind == TERM and not rule.symbol:
            raise BadParam(f"terminal rule {name} has no symbol", rule=name)
    dims: Dict[str, Tuple[int, int]] = {}
    for name in order:
        rule = variables[name]
        if rule.kind == TERM:
            dims[name] = (1, 1)
        elif rule.kind == HORIZ:
            (r1, c1), (r2, c2) = dims[rule.children[0]], dims[rule.children[1]]
            if r1 != r2:
                raise DimMismatch(f"rule {name}: horizontal children have {r1} and {r2} rows", rule=name)
            dims[name] = (r1, c1 + c2)
        elif rule.kind == VERT:
            (r1, c1), (r2, c2) = dims[rule.children[0]], dims[rule.children[1]]
            if c1 != c2:
                raise DimMismatch(f"rule {name}: vertical children have {c1} and {c2} cols", rule=name)
            dims[name] = (r1 + r2, c1)
        elif rule.kind == RUN_H:
            r, c = dims[rule.children[0]]
            dims[name] = (r, rule.count * c)
        elif rule.kind == RUN_V:
            r, c = dims[rule.children[0]]
            dims[name] = (rule.count * r, c)
        else:
            raise BadParam(f"rule {name} has unknown kind {rule.kind!r}", rule=name)
    return GrammarInfo(dims, G.size, order)


def terminal_alphabet(G: Grammar2D) -> Tuple[str, ...]:
    return tuple(sorted({rule.symbol for _, rule in G.rules if rule.kind == TERM}))


def expand_variables(G: Grammar2D, budget: Union[None, int, WorkBudget] = None) -> Tuple[Dict[str, np.ndarray], Tuple[str, ...]]:
    """Memoized expansion of every variable, as symbol-id arrays."""
    info = validate(G)
    budget = WorkBudget.of(budget)
    alphabet = terminal_alphabet(G)
    index = {t: i for i, t in enumerate(alphabet)}
    variables = G.variables
    out: Dict[str, np.ndarray] = {}
    for name in info.order:
        r, c = info.dims[name]
        budget.charge(r * c, 'grammar expansion')
        rule = variables[name]
        if rule.kind == TERM:
            out[name] = np.array([[index[rule.symbol]]], dtype=np.int32)
        elif rule.kind == HORIZ:
            out[name] = np.hstack([out[rule.children[0]], out[rule.children[1]]])
        elif rule.kind == VERT:
            out[name] = np.vstack([out[rule.children[0]], out[rule.children[1]]])
        elif rule.kind == RUN_H:
            out[name] = np.tile(out[rule.children[0]], (1, rule.count))
        else:
            out[name] = np.tile(out[rule.children[0]], (rule.count, 1))
    return out, alphabet


def expand(G: Grammar2D, budget: Union[None, int, WorkBudget] = None) -> Matrix2D:
    arrays, alphabet = expand_variables(G, budget)
    return Matrix2D(arrays[G.axiom], alphabet)


def parse_tree_size(G: Grammar2D) -> int:
    """Nodes of the full parse tree, terminal symbol leaves included."""
    info = validate(G)
    variables = G.variables
    count: Dict[str, int] = {}
    for name in info.order:
        rule = variables[name]
        if rule.kind == TERM:
            count[name] = 2
        elif rule.kind in BINARY_KINDS:
            count[name] = 1 + count[rule.children[0]] + count[rule.children[1]]
        else:
            count[name] = 1 + rule.count * count[rule.children[0]]
    return count[G.axiom]


def run_count_bits(G: Grammar2D) -> int:
    """Bits needed to store the run counts; not part of the grammar size."""
    return sum(rule.count.bit_length() for _, rule in G.rules if rule.kind in RUN_KINDS)


def bit_size(G: Grammar2D) -> int:
    """Grammar size with every run count charged ceil(log2 k) extra units."""
    return G.size + sum(math.ceil(math.log2(rule.count)) for _, rule in G.rules if rule.kind in RUN_KINDS)


# ---------------------------------------------------------------------------
# grammar tree

PRIMARY, SECONDARY, SYMBOL, RUN_LEAF = 'primary', 'secondary', 'symbol', 'run'


@dataclass
class TreeNode:
    kind: str
    var: Optional[str]
    rect: Tuple[int, int, int, int]
    children: List[int] = field(default_factory=list)
    symbol: Optional[str] = None
    copy_of: Optional[Tuple[int, int]] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class GrammarTree:
    nodes: List[TreeNode]
    primary_of: Dict[str, int]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def leaves(self) -> List[TreeNode]:
        return [node for node in self.nodes if node.is_leaf]

    def count(self, kind: str) -> int:
        return sum(1 for node in self.nodes if node.kind == kind)

    @property
    def variable_nodes(self) -> int:
        return self.count(PRIMARY) + self.count(SECONDARY)


def grammar_tree(G: Grammar2D) -> GrammarTree:
    '''
    Preorder walk of the parse tree (left/up child first) where only the first
    occurrence of each variable is expanded. Later occurrences become
    secondary leaves and the k-1 trailing copies of a run collapse into one
    leaf. Every node carries its 1-based rectangle (i1, j1, i2, j2).
    '''
    info = validate(G)
    variables = G.variables
    dims = info.dims
    nodes: List[TreeNode] = []
    primary_of: Dict[str, int] = {}

    def make(kind, var, top, left, rows, cols, **extra) -> int:
        nodes.append(TreeNode(kind, var, (top, left, top + rows - 1, left + cols - 1), **extra))
        return len(nodes) - 1

    r0, c0 = dims[G.axiom]
    stack: List[Tuple] = [('var', None, G.axiom, 1, 1)]
    while stack:
        entry = stack.pop()
        if entry[0] == 'run':
            _, owner, top, left, rows, cols = entry
            source = nodes[owner].rect[:2]
            leaf = make(RUN_LEAF, variables[nodes[owner].var].children[0], top, left, rows, cols, copy_of=source)
            nodes[owner].children.append(leaf)
            continue
        _, parent, var, top, left = entry
        rows, cols = dims[var]
        if var in primary_of:
            first = nodes[primary_of[var]].rect
            idx = make(SECONDARY, var, top, left, rows, cols, copy_of=(first[0], first[1]))
            nodes[parent].children.append(idx)
            continue
        idx = make(PRIMARY, var, top, left, rows, cols)
        primary_of[var] = idx
        if parent is not None:
            nodes[parent].children.append(idx)
        rule = variables[var]
        if rule.kind == TERM:
            nodes[idx].children.append(make(SYMBOL, None, top, left, 1, 1, symbol=rule.symbol))
        elif rule.kind in BINARY_KINDS:
            first, second = rule.children
            fr, fc = dims[first]
            if rule.kind == HORIZ:
                stack.append(('var', idx, second, top, left + fc))
            else:
                stack.append(('var', idx, second, top + fr, left))
            stack.append(('var', idx, first, top, left))
        else:
            child = rule.children[0]
            cr, cc = dims[child]
            # the k-1 trailing copies collapse into one leaf after the first copy
            if rule.kind == RUN_H:
                stack.append(('run', idx, top, left + cc, cr, cols - cc))
            else:
                stack.append(('run', idx, top + cr, left, rows - cr, cc))
            stack.append(('var', idx, child, top, left))
    logger.debug("grammar tree of %s: %d nodes for %dx%d", G.axiom, len(nodes), r0, c0)
    return GrammarTree(nodes, primary_of)


# ---------------------------------------------------------------------------
# text format

_NAME = re.compile(r'^[A-Za-z_][A-Za-z0-9_\'.]*$')


def read_grammar(text: str) -> Grammar2D:
    axiom = None
    rules: List[Tuple[str, Rule2D]] = []
    defined: Dict[str, int] = {}
    refs: List[Tuple[str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        spans = [(t.group(), t.start() + 1) for t in re.finditer(r'\S+', raw)]
        if not spans or spans[0][0].startswith('#'):
            continue
        tokens = [t for t, _ in spans]
        if axiom is None:
            if tokens[0] != 'axiom' or len(tokens) not in (2, 3) or (len(tokens) == 3 and tokens[2] != 'rl'):
                raise ParseError("expected header 'axiom <Name> [rl]'", lineno, 1)
            axiom = (tokens[1], lineno, spans[1][1])
            continue
        if len(tokens) < 4 or tokens[1] != '=':
            raise ParseError("expected '<Name> = <kind> ...'", lineno, 1)
        name, kind = tokens[0], tokens[2]
        if not _NAME.match(name):
            raise ParseError(f"invalid variable name {name!r}", lineno, spans[0][1])
        if name in defined:
            raise ParseError(f"variable {name} already defined on line {defined[name]}", lineno, spans[0][1])
        defined[name] = lineno
        if kind == TERM and len(tokens) == 4:
            rule = Terminal(tokens[3])
        elif kind in BINARY_KINDS and len(tokens) == 5:
            rule = Rule2D(kind, (tokens[3], tokens[4]))
            refs.extend([(tokens[3], lineno, spans[3][1]), (tokens[4], lineno, spans[4][1])])
        elif kind in RUN_KINDS and len(tokens) == 5:
            try:
                count = int(tokens[3])
            except ValueError:
                raise ParseError(f"run count {tokens[3]!r} is not an integer", lineno, spans[3][1])
            if count < 2:
                raise ParseError(f"run count must be >= 2, got {count}", lineno, spans[3][1])
            rule = Rule2D(kind, (tokens[4],), None, count)
            refs.append((tokens[4], lineno, spans[4][1]))
        else:
            raise ParseError(f"malformed rule of kind {kind!r}", lineno, spans[2][1])
        rules.append((name, rule))
    if axiom is None:
        raise ParseError("missing header", 1, 1)
    for ref, lineno, col in refs + [axiom]:
        if ref not in defined:
            raise ParseError(f"unknown variable {ref}", lineno, col)
    return Grammar2D(tuple(rules), axiom[0])


def write_grammar(G: Grammar2D) -> str:
    header = f"axiom {G.axiom}" + (" rl" if G.is_runlength else "")
    lines = [header] + [f"{name} = {rule.text()}" for name, rule in G.rules]
    return '\n'.join(lines) + '\n'


def load_grammar(path: str) -> Grammar2D:
    with open(path, 'r', encoding='utf-8') as f:
        return read_grammar(f.read())


def normalize(G: Grammar2D) -> Grammar2D:
    """Rename variables V1..Vk in children-first order, axiom last."""
    info = validate(G)
    variables = G.variables
    reachable = _reachable(G)
    order = [name for name in info.order if name in reachable]
    rename = {name: f"V{i}" for i, name in enumerate(order, start=1)}
    rules = []
    for name in order:
        rule = variables[name]
        rules.append((rename[name], Rule2D(rule.kind, tuple(rename[c] for c in rule.children), rule.symbol, rule.count)))
    return Grammar2D(tuple(rules), rename[G.axiom])


def _reachable(G: Grammar2D) -> Set[str]:
    variables = G.variables
    seen = {G.axiom}
    stack = [G.axiom]
    while stack:
        for child in variables[stack.pop()].children:
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen


# ---------------------------------------------------------------------------
# constructive grammars


def build_zeros_rlslp(n: int) -> Grammar2D:
    if n < 2:
        raise BadParam(f"zeros RLSLP needs n >= 2, got {n}")
    return Grammar2D((('X', RunV(n, 'Y')), ('Y', RunH(n, 'Z')), ('Z', Terminal('0'))), 'X')


def build_ek_grammar(k: int) -> Grammar2D:
    '''
    SLP for E_k with Theta(k) rules: X_h and Y_h expand to 0^(2^h) and
    1^(2^h), C_h = X_{h-1} Y_{h-1} is the new bottom row, and
    S_h = (S_{h-1} S_{h-1}) over C_h.
    '''
    if not 1 <= k <= 20:
        raise BadParam(f"ek grammar needs 1 <= k <= 20, got {k}")
    rules: List[Tuple[str, Rule2D]] = [('X_0', Terminal('0')), ('Y_0', Terminal('1'))]
    for h in range(1, k):
        rules.append((f'X_{h}', Horiz(f'X_{h - 1}', f'X_{h - 1}')))
        rules.append((f'Y_{h}', Horiz(f'Y_{h - 1}', f'Y_{h - 1}')))
    rules.append(('S_1', Horiz('X_0', 'Y_0')))
    for h in range(2, k + 1):
        rules.append((f'C_{h}', Horiz(f'X_{h - 1}', f'Y_{h - 1}')))
        rules.append((f'R_{h}', Horiz(f'S_{h - 1}', f'S_{h - 1}')))
        rules.append((f'S_{h}', Vert(f'R_{h}', f'C_{h}')))
    return Grammar2D(tuple(rules), f'S_{k}')


def slp_1d(sequence: Sequence[str], kind: str = HORIZ, prefix: str = '') -> Grammar2D:
    '''
    Balanced binary SLP for a 1D sequence laid out along one axis; equal
    substrings cut at the same point share a variable, so right-hand sides
    stay distinct.
    '''
    if not sequence:
        raise BadParam("cannot build a grammar for an empty sequence")
    seq = tuple(str(t) for t in sequence)
    names: Dict[Tuple[str, ...], str] = {}
    rules: List[Tuple[str, Rule2D]] = []
    for token in sorted(set(seq)):
        names[(token,)] = f"{prefix}T{len(names)}"
        rules.append((names[(token,)], Terminal(token)))

    def build(lo: int, hi: int) -> str:
        key = seq[lo:hi]
        if key in names:
            return names[key]
        mid = lo + (hi - lo) // 2
        left = build(lo, mid)
        right = build(mid, hi)
        name = f"{prefix}N{len(rules)}"
        names[key] = name
        rules.append((name, Rule2D(kind, (left, right))))
        return name

    axiom = build(0, len(seq))
    return Grammar2D(tuple(rules), axiom)


def relabel(G: Grammar2D, mapping: Mapping[str, str], prefix: str) -> Grammar2D:
    """Copy of G with terminals renamed through mapping and variables prefixed."""
    rules = []
    for name, rule in G.rules:
        symbol = mapping.get(rule.symbol, rule.symbol) if rule.kind == TERM else None
        rules.append((prefix + name, Rule2D(rule.kind, tuple(prefix + c for c in rule.children), symbol, rule.count)))
    return Grammar2D(tuple(rules), prefix + G.axiom)


def lift(G: Grammar2D, kind: str, terminal_axioms: Mapping[str, str], prefix: str) -> Grammar2D:
    '''
    Turn every binary rule of G into a rule of the given kind and replace the
    terminal variables by the variables of terminal_axioms (symbol -> name).
    The result references those names without defining them.
    '''
    replace = {name: terminal_axioms[rule.symbol] for name, rule in G.rules if rule.kind == TERM}
    rules = []
    for name, rule in G.rules:
        if rule.kind == TERM:
            continue
        if rule.kind not in BINARY_KINDS:
            raise BadParam(f"only binary rules can be lifted, rule {name} is {rule.kind}")
        children = tuple(replace.get(c, prefix + c) for c in rule.children)
        rules.append((prefix + name, Rule2D(kind, children)))
    axiom = replace.get(G.axiom, prefix + G.axiom)
    return Grammar2D(tuple(rules), axiom)


def build_bk_grammar(k: int) -> Grammar2D:
    '''
    Business: SLP for the de Bruijn product matrix B_k
    Args: k - de Bruijn order, 1..12
    Returns: G0 and G1 (rows over <0,*> and <1,*>) plus the vertical lift of
             the 1D grammar of D_k whose terminals point at their axioms
    '''
    if not 1 <= k <= 12:
        raise BadParam(f"bk grammar needs 1 <= k <= 12, got {k}")
    base = slp_1d([str(b) for b in debruijn_word(k)], HORIZ)
    g0 = relabel(base, {'0': '00', '1': '01'}, 'R0_')
    g1 = relabel(base, {'0': '10', '1': '11'}, 'R1_')
    g2 = lift(base, VERT, {'0': g0.axiom, '1': g1.axiom}, 'C_')
    return Grammar2D(g0.rules + g1.rules + g2.rules, g2.axiom)


# ---------------------------------------------------------------------------
# exact smallest grammar


class _Contents:
    """Distinct factor contents of M with their feasible splits."""

    def __init__(self, M: Matrix2D, allow_runlength: bool, limit: int, budget: WorkBudget):
        self.M = M
        self.labels: Dict[Tuple[int, int], np.ndarray] = {}
        self.ids: Dict[Tuple[int, int, int], int] = {}
        self.shape: List[Tuple[int, int]] = []
        self.where: List[Tuple[int, int]] = []
        for r in range(1, M.rows + 1):
            for c in range(1, M.cols + 1):
                labels, count = window_labels(M, (r, c), True, budget)
                self.labels[(r, c)] = labels
                width = labels.shape[1]
                _, first = np.unique(labels.ravel(), return_index=True)
                for label, f in enumerate(first.tolist()):
                    self.ids[(r, c, label)] = len(self.shape)
                    self.shape.append((r, c))
                    self.where.append((f // width, f % width))
                if len(self.shape) > limit:
                    raise TooLarge(f"more than {limit} distinct factors", limit=limit)
        self.allow_runlength = allow_runlength
        self._splits: Dict[int, List[Tuple[Rule2D, Tuple[int, ...]]]] = {}

    def __len__(self) -> int:
        return len(self.shape)

    def at(self, r: int, c: int, i: int, j: int) -> int:
        return self.ids[(r, c, int(self.labels[(r, c)][i, j]))]

    def is_unit(self, cid: int) -> bool:
        return self.shape[cid] == (1, 1)

    def symbol(self, cid: int) -> str:
        i, j = self.where[cid]
        return self.M.alphabet[int(self.M.data[i, j])]

    def content_key(self, cid: int) -> Tuple:
        (r, c), (i, j) = self.shape[cid], self.where[cid]
        return (r, c) + tuple(self.M.data[i:i + r, j:j + c].ravel().tolist())

    def splits(self, cid: int) -> List[Tuple[Rule2D, Tuple[int, ...]]]:
        '''
        Feasible one-step splits as (rule over content ids, parts). Rule
        children hold stringified ids, resolved to names when the grammar is
        emitted.
        '''
        cached = self._splits.get(cid)
        if cached is not None:
            return cached
        (r, c), (i, j) = self.shape[cid], self.where[cid]
        out: List[Tuple[Rule2D, Tuple[int, ...]]] = []
        for t in range(1, c):
            left, right = self.at(r, t, i, j), self.at(r, c - t, i, j + t)
            out.append((Horiz(str(left), str(right)), (left, right)))
        for t in range(1, r):
            up, down = self.at(t, c, i, j), self.at(r - t, c, i + t, j)
            out.append((Vert(str(up), str(down)), (up, down)))
        if self.allow_runlength:
            for k in range(2, c + 1):
                if c % k == 0:
                    w = c // k
                    part = self.at(r, w, i, j)
                    if all(self.at(r, w, i, j + q * w) == part for q in range(1, k)):
                        out.append((RunH(k, str(part)), (part,)))
            for k in range(2, r + 1):
                if r % k == 0:
                    h = r // k
                    part = self.at(h, c, i, j)
                    if all(self.at(h, c, i + q * h, j) == part for q in range(1, k)):
                        out.append((RunV(k, str(part)), (part,)))
        self._splits[cid] = out
        return out


class _State(NamedTuple):
    members: frozenset
    closed: Tuple[Tuple[int, int], ...]


def _upper_bound(contents: _Contents, root: int) -> Dict[int, int]:
    '''
    Greedy closed set: prefer a run split, otherwise halve the longer side.
    Returns: content id -> chosen split index
    '''
    chosen: Dict[int, int] = {}
    stack = [root]
    while stack:
        cid = stack.pop()
        if cid in chosen or contents.is_unit(cid):
            continue
        splits = contents.splits(cid)
        r, c = contents.shape[cid]
        pick = None
        for idx, (rule, _) in enumerate(splits):
            if rule.kind in RUN_KINDS:
                pick = idx
                break
        if pick is None:
            want = (HORIZ, c // 2) if c >= r else (VERT, r // 2)
            for idx, (rule, parts) in enumerate(splits):
                if rule.kind != want[0]:
                    continue
                first = contents.shape[parts[0]]
                if (first[1] if rule.kind == HORIZ else first[0]) == want[1]:
                    pick = idx
                    break
        chosen[cid] = pick
        stack.extend(p for p in splits[pick][1])
    return chosen


def _emit(contents: _Contents, root: int, chosen: Mapping[int, int]) -> Grammar2D:
    if contents.is_unit(root):
        return Grammar2D((('S', Terminal(contents.symbol(root))),), 'S')
    units = {part for cid, idx in chosen.items() for part in contents.splits(cid)[idx][1] if contents.is_unit(part)}
    names: Dict[int, str] = {}
    for n, cid in enumerate(sorted(units, key=contents.symbol)):
        names[cid] = f"X{n}"
    inner = sorted((cid for cid in chosen if cid != root),
                   key=lambda cid: (contents.shape[cid][0] * contents.shape[cid][1], contents.content_key(cid)))
    for n, cid in enumerate(inner, start=1):
        names[cid] = f"A{n}"
    names[root] = 'S'
    rules: List[Tuple[str, Rule2D]] = [(names[cid], Terminal(contents.symbol(cid))) for cid in sorted(units, key=contents.symbol)]
    for cid in inner + [root]:
        rule, _ = contents.splits(cid)[chosen[cid]]
        rules.append((names[cid], Rule2D(rule.kind, tuple(names[int(c)] for c in rule.children), None, rule.count)))
    return Grammar2D(tuple(rules), 'S')


def g_exact(M: Matrix2D, allow_runlength: bool = False, work_limit: Optional[int] = None,
            factor_limit: Optional[int] = None, budget: Union[None, int, WorkBudget] = None) -> Grammar2D:
    '''
    Business: provably smallest 2D SLP (or RLSLP) generating M
    Args: M - target matrix (desk scale)
          allow_runlength - admit run-length rules
          work_limit - maximum number of search-state expansions
    Returns: Grammar2D of minimum size; raises BudgetExceeded carrying the best
             known grammar (not proven optimal) when the work limit is hit
    '''
    limit = config.G_FACTOR_LIMIT if factor_limit is None else factor_limit
    work_limit = config.G_WORK_LIMIT if work_limit is None else work_limit
    budget = WorkBudget.of(budget)
    contents = _Contents(M, allow_runlength, limit, budget)
    root = contents.at(M.rows, M.cols, 0, 0)
    sigma = len(np.unique(M.data))
    if contents.is_unit(root):
        return _emit(contents, root, {})

    greedy = _upper_bound(contents, root)
    best_cost = sigma + 2 * len(greedy)
    best_grammar = _emit(contents, root, greedy)
    floor = 0 if allow_runlength else math.ceil(math.log2(M.size))

    def heuristic(members: frozenset, closed: Dict[int, int]) -> int:
        used: Set[int] = set()
        bound = 0
        for cid in sorted(members - closed.keys()):
            needed: Set[int] = set()
            for _, parts in contents.splits(cid):
                extra = {p for p in parts if not contents.is_unit(p) and p not in members}
                if not extra:
                    needed = set()
                    break
                needed |= extra
            if needed and not (needed & used):
                used |= needed
                bound += 1
        return bound

    def close_free(members: Set[int], closed: Dict[int, int]) -> None:
        changed = True
        while changed:
            changed = False
            for cid in sorted(members - closed.keys()):
                for idx, (_, parts) in enumerate(contents.splits(cid)):
                    if all(contents.is_unit(p) or p in members for p in parts):
                        closed[cid] = idx
                        changed = True
                        break

    def push(heap, members: Set[int], closed: Dict[int, int]) -> None:
        close_free(members, closed)
        frozen = frozenset(members)
        key = _State(frozen, tuple(sorted(closed.items())))
        if key in visited:
            return
        visited.add(key)
        cost = sigma + 2 * len(frozen)
        f = cost + 2 * max(heuristic(frozen, closed), floor - len(frozen))
        if f > best_cost:
            return
        order = tuple(sorted(contents.content_key(c) for c in frozen))
        heapq.heappush(heap, (f, len(frozen), order, next(counter), frozen, dict(closed)))

    counter = itertools.count()
    visited: Set[_State] = set()
    heap: List = []
    push(heap, {root}, {})
    expansions = 0
    while heap:
        f, _, _, _, members, closed = heapq.heappop(heap)
        open_ = members - closed.keys()
        if not open_:
            logger.info("g_exact: size %d after %d expansions", f, expansions)
            return _emit(contents, root, closed)
        expansions += 1
        if expansions > work_limit:
            logger.warning("g_exact: work limit %d reached, returning size %d upper bound", work_limit, best_cost)
            raise BudgetExceeded(f"smallest-grammar search exceeded {work_limit} expansions",
                                 best=best_grammar, optimal=False, size=best_cost)
        target = max(open_, key=lambda c: (contents.shape[c][0] * contents.shape[c][1], -c))
        for idx, (_, parts) in enumerate(contents.splits(target)):
            new_members = set(members)
            new_members.update(p for p in parts if not contents.is_unit(p))
            new_closed = dict(closed)
            new_closed[target] = idx
            push(heap, new_members, new_closed)
    return best_grammar


# ---------------------------------------------------------------------------
# random grammars for property tests


def random_grammar(seed: int, max_rules: int = 8, sigma: int = 2, allow_runlength: bool = True,
                   max_side: int = 8) -> Grammar2D:
    '''
    Random valid grammar built bottom-up: every new rule combines existing
    variables with compatible dimensions; the axiom is the last rule.
    '''
    rng = np.random.default_rng(seed)
    rules: List[Tuple[str, Rule2D]] = []
    dims: Dict[str, Tuple[int, int]] = {}
    rhs: Set[Rule2D] = set()
    for s in range(sigma):
        name = f"T{s}"
        rules.append((name, Terminal(str(s))))
        rhs.add(rules[-1][1])
        dims[name] = (1, 1)
    attempts = 0
    while len(rules) < sigma + max_rules and attempts < 200:
        attempts += 1
        names = list(dims)
        kind = [HORIZ, VERT, RUN_H, RUN_V][int(rng.integers(0, 4 if allow_runlength else 2))]
        a = names[int(rng.integers(0, len(names)))]
        if kind in RUN_KINDS:
            k = int(rng.integers(2, 4))
            r, c = dims[a]
            new_dims = (r, c * k) if kind == RUN_H else (r * k, c)
            rule = Rule2D(kind, (a,), None, k)
        else:
            axis = 0 if kind == HORIZ else 1
            partners = [b for b in names if dims[b][axis] == dims[a][axis]]
            b = partners[int(rng.integers(0, len(partners)))]
            (r1, c1), (r2, c2) = dims[a], dims[b]
            new_dims = (r1, c1 + c2) if kind == HORIZ else (r1 + r2, c1)
            rule = Rule2D(kind, (a, b))
        if max(new_dims) > max_side or rule in rhs:
            continue
        name = f"V{len(rules)}"
        rules.append((name, rule))
        rhs.add(rule)
        dims[name] = new_dims
    return Grammar2D(tuple(rules), rules[-1][0])
