"""Astrolabous time-lock encryption.

A ciphertext hides an SKE key ``k`` behind a hash chain of ``q*tau_dec``
links.  Opening it takes ``q*tau_dec`` star-oracle calls, each depending on
the previous answer, so a party allowed ``q`` batches per round needs
``tau_dec`` rounds.
"""

from dataclasses import dataclass, field

from .crypto import LAMBDA, ske_dec, ske_enc, ske_gen, xor_bytes


class MalformedCiphertext(ValueError):
    pass


@dataclass
class AstCiphertext:
    tau_dec: int
    q: int
    c_mk: bytes
    chain: list = field(default_factory=list)

    @property
    def links(self):
        return self.q * self.tau_dec

    def to_bytes(self):
        head = (
            self.tau_dec.to_bytes(4, "big")
            + self.q.to_bytes(4, "big")
            + len(self.c_mk).to_bytes(4, "big")
        )
        return head + self.c_mk + b"".join(self.chain)

    @classmethod
    def from_bytes(cls, data, expect_q=None, expect_tau=None):
        c, rest = cls.parse_prefix(data)
        if rest:
            raise MalformedCiphertext(f"{len(rest)} trailing bytes")
        if expect_q is not None and c.q != expect_q:
            raise MalformedCiphertext(f"q={c.q}, expected {expect_q}")
        if expect_tau is not None and c.tau_dec != expect_tau:
            raise MalformedCiphertext(f"tau_dec={c.tau_dec}, expected {expect_tau}")
        return c

    @classmethod
    def parse_prefix(cls, data):
        """Parse a ciphertext from the front of ``data``; return it and the rest."""
        if len(data) < 12:
            raise MalformedCiphertext("header too short")
        tau = int.from_bytes(data[0:4], "big")
        q = int.from_bytes(data[4:8], "big")
        n = int.from_bytes(data[8:12], "big")
        if q < 1:
            raise MalformedCiphertext("q must be positive")
        blocks = q * tau + 1
        end = 12 + n + blocks * LAMBDA
        if len(data) < end:
            raise MalformedCiphertext("ciphertext truncated")
        c_mk = bytes(data[12:12 + n])
        body = data[12 + n:end]
        chain = [bytes(body[i:i + LAMBDA]) for i in range(0, len(body), LAMBDA)]
        return cls(tau, q, c_mk, chain), bytes(data[end:])


def sample_puzzle(rng, links):
    """Draw the key and the ``links`` chain seeds."""
    k = ske_gen(rng)
    rs = [rng.getrandbits(8 * LAMBDA).to_bytes(LAMBDA, "big") for _ in range(links)]
    return k, rs


def assemble(m, tau_dec, q, k, rs, hs):
    """Build the ciphertext from seeds ``rs`` and their star hashes ``hs``."""
    links = q * tau_dec
    if len(rs) != links or len(hs) != links:
        raise ValueError(f"need {links} seeds and hashes")
    if links == 0:
        chain = [k]
    else:
        chain = [rs[0]]
        chain += [xor_bytes(rs[j], hs[j - 1]) for j in range(1, links)]
        chain.append(xor_bytes(k, hs[links - 1]))
    return AstCiphertext(tau_dec, q, ske_enc(k, m), chain)


def ast_enc(m, tau_dec, q, rng, oracle):
    if tau_dec < 0 or q < 1:
        raise ValueError("need tau_dec >= 0 and q >= 1")
    k, rs = sample_puzzle(rng, q * tau_dec)
    hs = [oracle.star(r) for r in rs]
    return assemble(m, tau_dec, q, k, rs, hs)


class ChainSolver:
    """Step-by-step witness computation.

    ``pending()`` is the one query that can be asked next; ``feed()`` takes
    its answer.  Each step depends on the previous answer, which is what
    makes the count of steps a count of dependent calls.
    """

    def __init__(self, c):
        if len(c.chain) != c.links + 1:
            raise MalformedCiphertext("chain length does not match q*tau_dec+1")
        self.c = c
        self.witness = []

    @property
    def done(self):
        return len(self.witness) == self.c.links

    def pending(self):
        j = len(self.witness)
        if j == 0:
            return self.c.chain[0]
        return xor_bytes(self.c.chain[j], self.witness[j - 1])

    def feed(self, h):
        if self.done:
            raise ValueError("witness already complete")
        self.witness.append(h)


def solve_witness(c, oracle):
    """Return the witness and the number of dependent oracle calls."""
    s = ChainSolver(c)
    calls = 0
    while not s.done:
        s.feed(oracle.star(s.pending()))
        calls += 1
    return list(s.witness), calls


def ast_dec(c, w):
    links = c.links
    if len(w) != links:
        raise ValueError(f"witness has {len(w)} entries, expected {links}")
    if len(c.chain) != links + 1:
        raise MalformedCiphertext("chain length does not match q*tau_dec+1")
    if links == 0:
        k = c.chain[0]
    else:
        # the key sits in the last block, index links (not links-1)
        k = xor_bytes(w[-1], c.chain[links])
    return ske_dec(k, c.c_mk)
