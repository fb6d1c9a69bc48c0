"""Small trace builders shared by the system-level tests."""
from tdramsim import MemRequest, ReqKind, SimConfig, functional_oracle
from tdramsim.baselines import BaselineKind
from tdramsim.core import initial_digest
from tdramsim.system import System

R, W = ReqKind.READ, ReqKind.WRITE
SET_BITS = 15  # desk cache: 32768 lines


def addr(bank=0, k=0, tag=0, ch=0):
    """Line address on channel ``ch``, logical bank ``bank``; ``k`` picks a set within the bank."""
    return ((tag << SET_BITS) | (k << 6) | (bank << 3) | ch) << 6


def trace(*items):
    """items: (kind, addr, arrival_ns) tuples."""
    return [MemRequest(k, a, float(t), i) for i, (k, a, t) in enumerate(items)]


def clean(a):
    return (a, False, initial_digest(a))


def dirty(a, digest=12345):
    return (a, True, digest)


def desk(**kw):
    return SimConfig.desk(**kw)


def run_system(design, reqs, preload=(), **cfg_kw):
    s = System(desk(**cfg_kw), BaselineKind.parse(design), reqs, preload)
    return s, s.run()


def agrees_with_oracle(res, reqs, preload=(), **cfg_kw):
    ref = functional_oracle(reqs, desk(**cfg_kw), preload)
    return res.outcomes == ref.outcomes and res.image == ref.image
