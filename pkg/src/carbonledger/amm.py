"""Constant-product market maker for carbon tokens against the stable asset.

Reserves live in the token ledger under :data:`POOL_ACCOUNT`, so the
conservation checks over all balances include them. The 0.3% fee is taken
from the input amount and stays in the pool, raising the value of every
liquidity share.

All arithmetic is on unsigned Python integers with floor division; results
never wrap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction

from .crypto import POOL_ACCOUNT, Address
from .errors import LedgerError, Reason
from .state import MAX_QUANTITY, LiquidityPool, WorldState
from .token import credit, credit_stable, debit, debit_stable


class Direction(str, Enum):
    STABLE_IN = "StableIn"
    CARBON_IN = "CarbonIn"


@dataclass(frozen=True)
class SwapQuote:
    direction: Direction
    amount_in: int
    amount_out: int
    new_reserves: tuple[int, int]  # (carbon, stable)


def get_amount_out(reserve_in: int, reserve_out: int, amount_in: int, fee_num: int = 997, fee_den: int = 1000) -> int:
    """Output of an exact-in swap on an x*y=k curve with the fee charged on input."""
    effective_in = amount_in * fee_num
    return (reserve_out * effective_in) // (reserve_in * fee_den + effective_in)


def require_pool(state: WorldState) -> LiquidityPool:
    if state.pool is None:
        raise LedgerError(Reason.NO_POOL)
    return state.pool


def _check_reserve(value: int) -> int:
    if value > MAX_QUANTITY:
        raise LedgerError(Reason.OVERFLOW)
    return value


def _credit_shares(state: WorldState, owner: Address, shares: int) -> None:
    lp = state.lp_shares
    lp.shares[owner] = lp.shares.get(owner, 0) + shares
    lp.total_shares += shares


def create_pool(state: WorldState, creator: Address, carbon_amount: int, stable_amount: int) -> tuple[LiquidityPool, int]:
    if state.pool is not None:
        raise LedgerError(Reason.POOL_EXISTS)
    if carbon_amount <= 0 or stable_amount <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    ledger = state.token
    debit(ledger, creator, carbon_amount)
    debit_stable(ledger, creator, stable_amount)
    credit(ledger, POOL_ACCOUNT, carbon_amount)
    credit_stable(ledger, POOL_ACCOUNT, stable_amount)
    shares = math.isqrt(carbon_amount * stable_amount)
    state.pool = LiquidityPool(carbon_reserve=carbon_amount, stable_reserve=stable_amount)
    _credit_shares(state, creator, shares)
    return state.pool, shares


def add_liquidity(state: WorldState, provider: Address, carbon_in: int, stable_in: int) -> int:
    """Deposit both assets in full; mint shares by the scarcer side.

    Whatever the deposit carries beyond the pool ratio is donated to all
    share holders.
    """
    pool = require_pool(state)
    if carbon_in <= 0 or stable_in <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    total = state.lp_shares.total_shares
    minted = min(carbon_in * total // pool.carbon_reserve, stable_in * total // pool.stable_reserve)
    ledger = state.token
    debit(ledger, provider, carbon_in)
    debit_stable(ledger, provider, stable_in)
    if minted == 0:
        raise LedgerError(Reason.ZERO_SHARES)
    credit(ledger, POOL_ACCOUNT, carbon_in)
    credit_stable(ledger, POOL_ACCOUNT, stable_in)
    state.pool = replace(
        pool,
        carbon_reserve=_check_reserve(pool.carbon_reserve + carbon_in),
        stable_reserve=_check_reserve(pool.stable_reserve + stable_in),
    )
    _credit_shares(state, provider, minted)
    return minted


def remove_liquidity(state: WorldState, provider: Address, shares: int) -> tuple[int, int]:
    pool = require_pool(state)
    if shares <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    lp = state.lp_shares
    owned = lp.shares.get(provider, 0)
    if shares > owned:
        raise LedgerError(Reason.INSUFFICIENT_SHARES, f"{owned} < {shares}")
    total = lp.total_shares
    carbon_out = shares * pool.carbon_reserve // total
    stable_out = shares * pool.stable_reserve // total

    if owned == shares:
        del lp.shares[provider]
    else:
        lp.shares[provider] = owned - shares
    lp.total_shares = total - shares

    ledger = state.token
    debit(ledger, POOL_ACCOUNT, carbon_out)
    debit_stable(ledger, POOL_ACCOUNT, stable_out)
    credit(ledger, provider, carbon_out)
    credit_stable(ledger, provider, stable_out)
    if lp.total_shares == 0:
        # last shares redeem the whole reserve, so nothing is left behind
        state.pool = None
    else:
        state.pool = replace(
            pool,
            carbon_reserve=pool.carbon_reserve - carbon_out,
            stable_reserve=pool.stable_reserve - stable_out,
        )
    return carbon_out, stable_out


def quote(pool: LiquidityPool, direction: Direction, amount_in: int) -> SwapQuote:
    """Pure swap math on a pool snapshot; does not check balances or limits."""
    if direction is Direction.STABLE_IN:
        out = get_amount_out(pool.stable_reserve, pool.carbon_reserve, amount_in, pool.fee_numerator, pool.fee_denominator)
        new = (pool.carbon_reserve - out, pool.stable_reserve + amount_in)
    else:
        out = get_amount_out(pool.carbon_reserve, pool.stable_reserve, amount_in, pool.fee_numerator, pool.fee_denominator)
        new = (pool.carbon_reserve + amount_in, pool.stable_reserve - out)
    return SwapQuote(direction, amount_in, out, new)


def swap_exact_in(state: WorldState, trader: Address, direction: Direction, amount_in: int, min_out: int) -> SwapQuote:
    pool = require_pool(state)
    if amount_in <= 0:
        raise LedgerError(Reason.ZERO_AMOUNT)
    ledger = state.token
    have = ledger.stable_balance(trader) if direction is Direction.STABLE_IN else ledger.balance(trader)
    if have < amount_in:
        raise LedgerError(Reason.INSUFFICIENT_BALANCE)
    result = quote(pool, direction, amount_in)
    if result.amount_out < min_out:
        raise LedgerError(Reason.SLIPPAGE_EXCEEDED, f"{result.amount_out} < {min_out}")
    if result.amount_out == 0:
        raise LedgerError(Reason.DUST_OUTPUT)

    if direction is Direction.STABLE_IN:
        debit_stable(ledger, trader, amount_in)
        credit_stable(ledger, POOL_ACCOUNT, amount_in)
        debit(ledger, POOL_ACCOUNT, result.amount_out)
        credit(ledger, trader, result.amount_out)
    else:
        debit(ledger, trader, amount_in)
        credit(ledger, POOL_ACCOUNT, amount_in)
        debit_stable(ledger, POOL_ACCOUNT, result.amount_out)
        credit_stable(ledger, trader, result.amount_out)
    carbon, stable = result.new_reserves
    state.pool = replace(pool, carbon_reserve=_check_reserve(carbon), stable_reserve=_check_reserve(stable))
    return result


def spot_price(pool: LiquidityPool | None) -> Fraction:
    """Stable per carbon, exact and reduced."""
    if pool is None:
        raise LedgerError(Reason.NO_POOL)
    return Fraction(pool.stable_reserve, pool.carbon_reserve)


def render_decimal(value: Fraction | int, places: int = 6) -> str:
    """Display-only rendering truncated to ``places`` decimals."""
    value = Fraction(value)
    scaled = value.numerator * 10**places // value.denominator
    whole, frac = divmod(scaled, 10**places)
    return f"{whole}.{frac:0{places}d}"
