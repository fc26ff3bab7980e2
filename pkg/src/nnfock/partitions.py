"""Set partitions of {1..n}: noncrossing, interval, no-singleton and connected
families, plus Mobius-inversion oracles for free and Boolean cumulants."""

from dataclasses import dataclass
from functools import cached_property, lru_cache

MAX_N = 14

OPENING, CLOSING, MIDDLE, SINGLETON = "opening", "closing", "middle", "singleton"


class PartitionSizeError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """A partition of {1..n}; blocks are sorted tuples ordered by their minimum."""

    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0]))
        object.__setattr__(self, "blocks", blocks)
        elems = sorted(x for b in blocks for x in b)
        if elems != list(range(1, self.n + 1)):
            raise ValueError(f"blocks {blocks} do not partition 1..{self.n}")

    def __repr__(self):
        return "".join("{" + "".join(map(str, b)) + "}" if self.n < 10 else str(b)
                       for b in self.blocks)

    @cached_property
    def block_of(self):
        return {x: k for k, b in enumerate(self.blocks) for x in b}

    @cached_property
    def roles(self):
        """Role of each element 1..n (index 0 is element 1)."""
        out = [None] * self.n
        for b in self.blocks:
            if len(b) == 1:
                out[b[0] - 1] = SINGLETON
                continue
            for x in b:
                out[x - 1] = OPENING if x == b[0] else CLOSING if x == b[-1] else MIDDLE
        return tuple(out)

    @cached_property
    def inner_flags(self):
        """True for blocks V nested inside some block W (o_W < o_V < c_V < c_W)."""
        flags = []
        for v in self.blocks:
            flags.append(any(w[0] < v[0] and v[-1] < w[-1] for w in self.blocks if w is not v))
        return tuple(flags)

    @cached_property
    def is_noncrossing(self):
        for a in self.blocks:
            for b in self.blocks:
                if a is b:
                    continue
                for i in a:
                    for k in a:
                        if k > i and any(i < j < k for j in b) and any(l > k for l in b):
                            return False
        return True

    @property
    def has_singleton(self):
        return any(len(b) == 1 for b in self.blocks)

    @property
    def is_interval(self):
        return all(b[-1] - b[0] + 1 == len(b) for b in self.blocks)

    @property
    def is_connected(self):
        """1 and n in the same block."""
        return self.block_of[1] == self.block_of[self.n]

    def restrict(self, word):
        """Sub-words of ``word`` (a sequence of length n) along each block."""
        return [tuple(word[x - 1] for x in b) for b in self.blocks]


def _check(n):
    if n < 0 or n > MAX_N:
        raise PartitionSizeError(f"partition enumeration limited to 0 <= n <= {MAX_N}")


@lru_cache(maxsize=None)
def _nc_blocks(lo, hi):
    """Noncrossing partitions of the interval [lo, hi] as tuples of blocks,
    built by placing the block of ``lo`` and filling the gaps recursively."""
    if lo > hi:
        return ((),)
    out = []

    def grow(block, fillings):
        last = block[-1]
        for rest in _nc_blocks(last + 1, hi):
            out.extend((tuple(block),) + f + rest for f in fillings)
        for nxt in range(last + 1, hi + 1):
            gaps = _nc_blocks(last + 1, nxt - 1)
            grow(block + [nxt], [f + g for f in fillings for g in gaps])

    grow([lo], [()])
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_nc(n):
    _check(n)
    return tuple(Partition(n, blocks) for blocks in _nc_blocks(1, n))


@lru_cache(maxsize=None)
def enumerate_int(n):
    _check(n)
    out = []
    for mask in range(2 ** max(n - 1, 0)):
        blocks, cur = [], [1] if n else []
        for x in range(2, n + 1):
            if mask >> (x - 2) & 1:
                blocks.append(cur)
                cur = [x]
            else:
                cur.append(x)
        if cur:
            blocks.append(cur)
        out.append(Partition(n, tuple(tuple(b) for b in blocks)))
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_nc_ns(n):
    return tuple(p for p in enumerate_nc(n) if not p.has_singleton)


@lru_cache(maxsize=None)
def enumerate_nc_ns_connected(n):
    if n == 0:
        return ()
    return tuple(p for p in enumerate_nc_ns(n) if p.is_connected)


def _product(values):
    out = 1
    for v in values:
        out = out * v
    return out


def mobius_free_cumulants(moments, word, cache=None):
    """Free cumulant of ``word`` by inverting m = sum over NC(n) of products of cumulants.

    ``moments`` maps a tuple of letters to a scalar.  Letters must be hashable.
    Passing the same ``cache`` dict across calls shares sub-word cumulants.
    """
    cache = {} if cache is None else cache

    def cum(w):
        if w in cache:
            return cache[w]
        n = len(w)
        total = moments(w)
        for p in enumerate_nc(n):
            if len(p.blocks) == 1:
                continue
            total = total - _product(cum(sub) for sub in p.restrict(w))
        cache[w] = total
        return total

    return cum(tuple(word))


def mobius_boolean_cumulants(moments, word, cache=None):
    """Boolean cumulant of ``word`` by inverting m = sum over Int(n) of products."""
    cache = {} if cache is None else cache

    def cum(w):
        if w in cache:
            return cache[w]
        n = len(w)
        total = moments(w)
        for p in enumerate_int(n):
            if len(p.blocks) == 1:
                continue
            total = total - _product(cum(sub) for sub in p.restrict(w))
        cache[w] = total
        return total

    return cum(tuple(word))


def catalan(n):
    out = 1
    for k in range(n):
        out = out * 2 * (2 * k + 1) // (k + 2)
    return out
