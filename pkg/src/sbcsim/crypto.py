"""Hashing, random oracles, masking, symmetric encryption and certification.

Everything here works on 256-bit (32-byte) blocks.  The random oracle comes
in two flavours: ``concrete`` answers with SHA-256 and ``simulated`` fills a
lazy table from the simulation PRNG.  Both keep the table so that audits can
inspect which points were queried.
"""

import hashlib
import hmac

LAMBDA = 32  # bytes

# Domain prefixes keep the two oracle tables disjoint in concrete mode.  The
# main oracle is plain SHA-256 so that H("") is the textbook digest.
_PREFIX = {"main": b"", "star": b"\x01star"}


def sha256(data):
    return hashlib.sha256(data).digest()


def xor_bytes(a, b):
    if len(a) != len(b):
        raise ValueError(f"xor of unequal lengths {len(a)} and {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


def ctr_bytes(i):
    return i.to_bytes(4, "big")


class RandomOracle:
    """Lazily sampled oracle with two independent tables, ``main`` and ``star``."""

    def __init__(self, mode="concrete", rng=None):
        if mode not in ("concrete", "simulated"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        if mode == "simulated" and rng is None:
            raise ValueError("simulated oracle needs a PRNG")
        self.mode = mode
        self.rng = rng
        self.tables = {"main": {}, "star": {}}
        self.calls = {"main": 0, "star": 0}

    def query(self, x, oracle="main"):
        table = self.tables[oracle]
        self.calls[oracle] += 1
        h = table.get(x)
        if h is None:
            if self.mode == "concrete":
                h = sha256(_PREFIX[oracle] + x)
            else:
                h = self.rng.getrandbits(8 * LAMBDA).to_bytes(LAMBDA, "big")
            table[x] = h
        return h

    def star(self, x):
        return self.query(x, "star")

    def main(self, x):
        return self.query(x, "main")


def mask_expand(oracle, rho, length):
    """Keystream ``H(rho||0) || H(rho||1) || ...`` on the main oracle, cut to ``length``."""
    if length < 0:
        raise ValueError("negative mask length")
    out = bytearray()
    ctr = 0
    while len(out) < length:
        out += oracle.query(rho + ctr_bytes(ctr), "main")
        ctr += 1
    return bytes(out[:length])


# -- symmetric encryption ---------------------------------------------------

def ske_gen(rng):
    return rng.getrandbits(8 * LAMBDA).to_bytes(LAMBDA, "big")


def _ske_stream(k, length):
    out = bytearray()
    ctr = 0
    while len(out) < length:
        out += sha256(b"ske" + k + ctr_bytes(ctr))
        ctr += 1
    return bytes(out[:length])


def ske_enc(k, m):
    if len(k) != LAMBDA:
        raise ValueError("SKE keys are 32 bytes")
    return xor_bytes(m, _ske_stream(k, len(m)))


ske_dec = ske_enc


# -- query-budget wrapper ---------------------------------------------------

class BudgetExhausted(Exception):
    pass


class Wrapper:
    """Per-round query budget in front of the star oracle.

    One Evaluate call costs one unit regardless of the batch size.  Honest
    parties have their own ledger; all corrupted parties share ``corr``.
    """

    CORR = "corr"

    def __init__(self, oracle, q, now, on_batch=None):
        if q < 1:
            raise ValueError("q must be at least 1")
        self.oracle = oracle
        self.q = q
        self.now = now
        self.on_batch = on_batch
        self.ledger = {}  # key -> [round, used]

    def used(self, key, rnd=None):
        rnd = self.now() if rnd is None else rnd
        entry = self.ledger.get(key)
        if entry is None or entry[0] != rnd:
            return 0
        return entry[1]

    def remaining(self, key):
        return self.q - self.used(key)

    def evaluate(self, caller, batch, corrupted=False):
        key = self.CORR if corrupted else caller
        cl = self.now()
        entry = self.ledger.get(key)
        if entry is None or entry[0] < cl:
            entry = [cl, 0]
        if entry[1] >= self.q:
            if self.on_batch:
                self.on_batch(caller, key, len(batch), False)
            raise BudgetExhausted(f"{caller} used all {self.q} batches in round {cl}")
        entry[1] += 1
        self.ledger[key] = entry
        if self.on_batch:
            self.on_batch(caller, key, len(batch), True)
        return [self.oracle.query(x, "star") for x in batch]


# -- certification ----------------------------------------------------------

class Cert:
    """Certification functionality for one signer.

    Signatures are HMAC-SHA256 under the signer's key, so they are concrete
    bytes, but the log decides every verification.
    """

    def __init__(self, signer, key, is_corrupted=lambda: False, phi=None):
        self.signer = signer
        self.key = key
        self.is_corrupted = is_corrupted
        # adversary's answer for unknown pairs of a corrupted signer
        self.phi = phi or (lambda m, sig: 1 if sig == self._sig(m) else 0)
        self.log = {}
        self.halted = False

    def _sig(self, m):
        return hmac.new(self.key, m, hashlib.sha256).digest()

    def sign(self, m):
        if self.halted:
            return None
        sig = self._sig(m)
        if self.log.get((m, sig)) == 0:
            self.halted = True
            return None
        self.log[(m, sig)] = 1
        return sig

    def verify(self, m, sig):
        if self.log.get((m, sig)) == 1:
            return 1
        if not self.is_corrupted() and not any(
            f == 1 and mm == m for (mm, _), f in self.log.items()
        ):
            self.log[(m, sig)] = 0
            return 0
        if (m, sig) in self.log:
            return self.log[(m, sig)]
        f = 1 if self.phi(m, sig) else 0
        self.log[(m, sig)] = f
        return f
