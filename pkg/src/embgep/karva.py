"""Karva-encoded genomes: fixed-length linear genes decoded into expression trees.

A gene is a linear string of symbols split into a head (functions and
terminals) and a tail (terminals only).  With a binary function set the tail
length is tied to the head length by ``tail = head + 1``, which guarantees
that breadth-first decoding of any gene always terminates inside the string.
A chromosome is a tuple of genes combined by addition.

Text serialisation: one gene per line, space-separated symbol tokens
(``+ - * / d0 d1 ... c0 .. c9``), a literal ``|``, then the 10 pool
constants.  See ``chromosome_to_text`` / ``chromosome_from_text``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

FUNCTION_TOKENS = ("+", "-", "*", "/")
ADD, SUB, MUL, DIV = range(4)
MAX_ARITY = 2
POOL_SIZE = 10

KIND_FUNC = "func"
KIND_INPUT = "input"
KIND_CONST = "const"


class KExprError(ValueError):
    """Malformed K-expression text or symbol token."""


@dataclass(frozen=True)
class Symbol:
    """One position of a gene: a binary function, an input or a pool constant."""

    kind: str
    index: int

    @property
    def is_terminal(self) -> bool:
        return self.kind != KIND_FUNC

    @property
    def arity(self) -> int:
        return 0 if self.is_terminal else MAX_ARITY

    @property
    def token(self) -> str:
        if self.kind == KIND_FUNC:
            return FUNCTION_TOKENS[self.index]
        if self.kind == KIND_INPUT:
            return f"d{self.index}"
        return f"c{self.index}"


def function_symbol(token: str) -> Symbol:
    if token not in FUNCTION_TOKENS:
        raise KExprError(f"unknown function token {token!r}")
    return Symbol(KIND_FUNC, FUNCTION_TOKENS.index(token))


def input_symbol(index: int) -> Symbol:
    if index < 0:
        raise KExprError(f"negative input index {index}")
    return Symbol(KIND_INPUT, index)


def constant_symbol(index: int) -> Symbol:
    if not 0 <= index < POOL_SIZE:
        raise KExprError(f"constant index {index} outside pool 0..{POOL_SIZE - 1}")
    return Symbol(KIND_CONST, index)


def parse_symbol(token: str) -> Symbol:
    if token in FUNCTION_TOKENS:
        return function_symbol(token)
    if len(token) > 1 and token[0] in ("d", "c") and token[1:].isdigit():
        index = int(token[1:])
        return input_symbol(index) if token[0] == "d" else constant_symbol(index)
    raise KExprError(f"unknown symbol token {token!r}")


def tail_length(head_length: int, max_arity: int = MAX_ARITY) -> int:
    """Tail length required for a head, ``head * (max_arity - 1) + 1``."""
    if head_length < 1:
        raise ValueError(f"head_length must be >= 1, got {head_length}")
    if max_arity < 1:
        raise ValueError(f"max_arity must be >= 1, got {max_arity}")
    return head_length * (max_arity - 1) + 1


@dataclass(frozen=True)
class Gene:
    """Head and tail symbol strings plus the 10-constant pool (c0..c9)."""

    head: tuple[Symbol, ...]
    tail: tuple[Symbol, ...]
    constants: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "tail", tuple(self.tail))
        object.__setattr__(self, "constants", tuple(float(c) for c in self.constants))

    @property
    def symbols(self) -> tuple[Symbol, ...]:
        return self.head + self.tail

    @property
    def head_length(self) -> int:
        return len(self.head)

    @property
    def length(self) -> int:
        return len(self.head) + len(self.tail)


@dataclass(frozen=True)
class Chromosome:
    """Genes combined by the fixed linking function, addition."""

    genes: tuple[Gene, ...]

    def __post_init__(self):
        genes = tuple(self.genes)
        if not genes:
            raise ValueError("chromosome needs at least one gene")
        head = genes[0].head_length
        tail = len(genes[0].tail)
        for g in genes[1:]:
            if g.head_length != head or len(g.tail) != tail:
                raise ValueError("all genes of a chromosome must share head/tail lengths")
        object.__setattr__(self, "genes", genes)

    @property
    def head_length(self) -> int:
        return self.genes[0].head_length


@dataclass(frozen=True)
class Validity:
    """Verdict of structural gene validation; ``position`` locates the first offence."""

    ok: bool
    reason: str | None = None
    section: str | None = None
    position: int | None = None


def validate(gene: Gene, num_inputs: int | None = None) -> Validity:
    """Check tail-terminal closure, the head/tail length tie and index bounds."""
    expected_tail = tail_length(max(len(gene.head), 1))
    if len(gene.head) < 1:
        return Validity(False, "empty head", "head", 0)
    if len(gene.tail) != expected_tail:
        return Validity(
            False,
            f"tail length {len(gene.tail)} != head*(arity-1)+1 = {expected_tail}",
            "tail",
            None,
        )
    for i, sym in enumerate(gene.tail):
        if not sym.is_terminal:
            return Validity(False, f"function {sym.token!r} in tail", "tail", i)
    if len(gene.constants) != POOL_SIZE:
        return Validity(
            False, f"constant pool has {len(gene.constants)} entries, expected {POOL_SIZE}",
            "constants", None,
        )
    for i, sym in enumerate(gene.symbols):
        if sym.kind == KIND_CONST and not 0 <= sym.index < POOL_SIZE:
            section = "head" if i < len(gene.head) else "tail"
            return Validity(False, f"constant index {sym.index} out of pool", section, i)
        if num_inputs is not None and sym.kind == KIND_INPUT and not 0 <= sym.index < num_inputs:
            section = "head" if i < len(gene.head) else "tail"
            return Validity(False, f"input index {sym.index} >= {num_inputs}", section, i)
    return Validity(True)


def validate_chromosome(chrom: Chromosome, num_inputs: int | None = None) -> Validity:
    for gene in chrom.genes:
        verdict = validate(gene, num_inputs)
        if not verdict.ok:
            return verdict
    return Validity(True)


@dataclass(frozen=True)
class Node:
    """Expression-tree node; functions carry exactly two children."""

    symbol: Symbol
    children: tuple["Node", ...] = field(default=())

    @property
    def size(self) -> int:
        return 1 + sum(child.size for child in self.children)


def consumed_length(gene: Gene) -> int:
    """Number of leading symbols the breadth-first decoding actually reads."""
    symbols = gene.symbols
    next_free = 1
    i = 0
    while i < next_free:
        if not symbols[i].is_terminal:
            next_free += MAX_ARITY
        i += 1
    return next_free


def decode(gene: Gene) -> Node:
    """Decode a gene breadth-first: the open argument slots of each level are
    filled left to right by the next unread symbols; unread symbols are the
    gene's non-coding region."""
    symbols = gene.symbols
    children_of: dict[int, tuple[int, int]] = {}
    next_free = 1
    i = 0
    while i < next_free:
        if not symbols[i].is_terminal:
            if next_free + MAX_ARITY > len(symbols):
                raise ValueError("gene too short to decode; did it pass validate()?")
            children_of[i] = (next_free, next_free + 1)
            next_free += MAX_ARITY
        i += 1

    def build(idx: int) -> Node:
        if idx in children_of:
            a, b = children_of[idx]
            return Node(symbols[idx], (build(a), build(b)))
        return Node(symbols[idx])

    return build(0)


def evaluate_tree(tree: Node, inputs, constants) -> float | None:
    """Evaluate an expression tree; ``None`` flags any non-finite result.

    Division by zero, overflow and every other non-finite intermediate value
    return the flag instead of a number: there is no protected arithmetic.
    """
    sym = tree.symbol
    if sym.kind == KIND_INPUT:
        value = float(inputs[sym.index])
    elif sym.kind == KIND_CONST:
        value = float(constants[sym.index])
    else:
        left = evaluate_tree(tree.children[0], inputs, constants)
        right = evaluate_tree(tree.children[1], inputs, constants)
        if left is None or right is None:
            return None
        if sym.index == ADD:
            value = left + right
        elif sym.index == SUB:
            value = left - right
        elif sym.index == MUL:
            value = left * right
        else:
            if right == 0.0:
                return None
            value = left / right
    return value if math.isfinite(value) else None


def evaluate_gene(gene: Gene, inputs) -> float | None:
    return evaluate_tree(decode(gene), inputs, gene.constants)


def evaluate_chromosome(chrom: Chromosome, inputs) -> float | None:
    """Sum of per-gene values (linking by addition); non-finite if any gene is."""
    total = 0.0
    for gene in chrom.genes:
        value = evaluate_gene(gene, inputs)
        if value is None:
            return None
        total += value
    return total if math.isfinite(total) else None


def gene_to_text(gene: Gene) -> str:
    tokens = " ".join(sym.token for sym in gene.symbols)
    consts = " ".join(repr(c) for c in gene.constants)
    return f"{tokens} | {consts}"


def gene_from_text(line: str) -> Gene:
    if "|" not in line:
        raise KExprError("gene line is missing the '|' constant separator")
    sym_part, _, const_part = line.partition("|")
    symbols = tuple(parse_symbol(tok) for tok in sym_part.split())
    constants = tuple(float(tok) for tok in const_part.split())
    if len(constants) != POOL_SIZE:
        raise KExprError(f"expected {POOL_SIZE} pool constants, got {len(constants)}")
    n = len(symbols)
    if n < 3 or n % 2 == 0:
        raise KExprError(f"gene length {n} is not 2*head+1 for any head >= 1")
    head_len = (n - 1) // 2
    return Gene(symbols[:head_len], symbols[head_len:], constants)


def chromosome_to_text(chrom: Chromosome) -> str:
    return "\n".join(gene_to_text(g) for g in chrom.genes) + "\n"


def chromosome_from_text(text: str) -> Chromosome:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise KExprError("empty K-expression text")
    return Chromosome(tuple(gene_from_text(line) for line in lines))


def write_kexpr(chrom: Chromosome, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(chromosome_to_text(chrom))


def read_kexpr(path) -> Chromosome:
    with open(path, "r", encoding="utf-8") as fh:
        return chromosome_from_text(fh.read())
