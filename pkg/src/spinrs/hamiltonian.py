"""Central functions on SL(n+1) used as Hamiltonians."""

from dataclasses import dataclass

import numpy as np

from .lie import (character_gradients, fundamental_characters,
                  invariant_gradient, power_traces)


@dataclass(frozen=True)
class HamiltonianSpec:
    """``f(g) = sum_k c_k tr(g^k) + sum_k b_k chi_k(g)``.

    Parameters
    ----------
    power : tuple of (int, complex)
        Power-trace terms ``(k, c_k)``.
    characters : tuple of (int, complex)
        Fundamental-character terms ``(k, b_k)``, ``1 <= k <= n``.
    """

    power: tuple = ((1, 1.0),)
    characters: tuple = ()

    def __post_init__(self):
        power = tuple((int(k), complex(c) if np.iscomplexobj(c) else float(c))
                      for k, c in self.power)
        chars = tuple((int(k), complex(c) if np.iscomplexobj(c) else float(c))
                      for k, c in self.characters)
        object.__setattr__(self, "power", power)
        object.__setattr__(self, "characters", chars)
        if not any(c != 0 for _, c in power + chars):
            raise ValueError("Hamiltonian needs at least one nonzero coefficient")
        if any(k < 1 for k, _ in chars):
            raise ValueError("character index must be >= 1")

    @classmethod
    def trace(cls, scale=1.0):
        """``scale * tr(g)``, the first character."""
        return cls(power=((1, scale),))

    @classmethod
    def character(cls, k, scale=1.0):
        return cls(power=(), characters=((k, scale),))

    def _check_chars(self, m):
        for k, _ in self.characters:
            if k > m - 1:
                raise ValueError(f"character chi_{k} undefined for SL({m})")

    def value(self, g):
        g = np.asarray(g, dtype=complex)
        total = 0j
        for k, c in self.power:
            if k > 0:
                total += c * power_traces(g, k)[-1]
            elif k < 0:
                total += c * np.trace(np.linalg.matrix_power(g, k))
            else:
                total += c * g.shape[0]
        if self.characters:
            self._check_chars(g.shape[0])
            chi = fundamental_characters(g)
            total += sum(c * chi[k - 1] for k, c in self.characters)
        return total

    def gradient(self, g):
        """Trace-form gradient ``Df(g)`` (traceless, commutes with ``g``)."""
        g = np.asarray(g, dtype=complex)
        out = invariant_gradient(g, self.power)
        if self.characters:
            self._check_chars(g.shape[0])
            _, grads = character_gradients(g)
            for k, c in self.characters:
                out = out + c * grads[k - 1]
        return out

    def to_dict(self):
        def enc(terms):
            return [[k, c.real, c.imag] if isinstance(c, complex) else [k, c]
                    for k, c in terms]
        return {"power": enc(self.power), "characters": enc(self.characters)}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"power", "characters"}
        if unknown:
            raise ValueError(f"unknown hamiltonian keys: {sorted(unknown)}")

        def dec(terms):
            out = []
            for t in terms:
                if len(t) == 2:
                    out.append((int(t[0]), float(t[1])))
                elif len(t) == 3:
                    out.append((int(t[0]), complex(t[1], t[2])))
                else:
                    raise ValueError(f"bad hamiltonian term {t!r}")
            return tuple(out)
        return cls(power=dec(d.get("power", [])), characters=dec(d.get("characters", [])))
