"""Emulated clock arithmetic and the dual-clock merge rule."""

from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from pacersim import DualClock, EphcClock, MergeAction, merge_estimate, time_to_slot


class TestNow:
    def test_offset_only(self):
        assert EphcClock(cycle_period=Fraction(2400), offset=Fraction(5)).now() == 5

    def test_count_times_period(self):
        c = EphcClock(cycle_period=Fraction(2400), offset=Fraction(100), cycle_count=10)
        assert c.now() == 24100

    def test_gpio_target(self):
        c = EphcClock(cycle_period=Fraction(12000), cycle_count=3)
        assert c.now() == 36000

    def test_closed_form_vs_ticking(self):
        c = EphcClock(cycle_period=Fraction(2400))
        c.tick(10**6)
        assert c.now() == 2_400_000_000
        assert c.now_exact() == Fraction(2400) * 10**6


class TestTick:
    def test_single_and_zero(self):
        c = EphcClock(cycle_period=Fraction(2400))
        c.tick()
        assert c.cycle_count == 1
        c.tick(0)
        assert c.cycle_count == 1


class TestAdjust:
    def test_offset_shift(self):
        c = EphcClock(cycle_period=Fraction(2400), offset=Fraction(5))
        before = c.now()
        c.adjust_offset(-5)
        assert c.now() == before - 5

    def test_set_time(self):
        c = EphcClock(cycle_period=Fraction(2400), cycle_count=7)
        c.set_time(123456)
        assert c.now() == 123456

    def test_rate_ratio_exact(self):
        c = EphcClock(cycle_period=Fraction(2400))
        c.adjust_rate(1 + Fraction(1, 10**6))
        assert c.cycle_period == Fraction(2400) + Fraction(2400, 10**6)

    def test_rate_continuity(self):
        c = EphcClock(cycle_period=Fraction(2400), offset=Fraction(17), cycle_count=12345)
        before = c.now_exact()
        c.adjust_rate(Fraction(999, 1000))
        assert abs(c.now_exact() - before) == 0

    @given(count=st.integers(0, 10**9),
           num=st.integers(1, 2000), den=st.integers(1, 2000))
    @settings(max_examples=200)
    def test_rate_continuity_property(self, count, num, den):
        c = EphcClock(cycle_period=Fraction(2400), cycle_count=count)
        before = c.now_exact()
        c.adjust_rate(Fraction(num, den))
        assert c.now_exact() == before


class TestTimeToSlot:
    def test_examples(self):
        assert time_to_slot(0, 10_000, 32) == 0
        assert time_to_slot(1_230_000, 10_000, 32) == 27
        assert time_to_slot(32 * 10_000, 10_000, 32) == 0


class TestMerge:
    def test_small_divergence_averages(self):
        dc = DualClock(tx=EphcClock(cycle_period=Fraction(1), offset=Fraction(110)),
                       rx=EphcClock(cycle_period=Fraction(1), offset=Fraction(100)),
                       tau=10)
        merged, action = dc.merge()
        assert merged == 110
        assert action is MergeAction.NONE

    def test_large_divergence_snaps_lagging(self):
        dc = DualClock(tx=EphcClock(cycle_period=Fraction(1), offset=Fraction(100)),
                       rx=EphcClock(cycle_period=Fraction(1), offset=Fraction(200)),
                       tau=10)
        merged, action = dc.merge()
        assert merged == 200
        assert action is MergeAction.SET_TX_TO_RX
        assert dc.tx.now() == 200

    @given(t=st.integers(0, 10**6), dtx=st.integers(0, 100), drx=st.integers(0, 100))
    @settings(max_examples=300)
    def test_error_bound_half_tau(self, t, dtx, drx):
        # Both readings lag true time by at most tau: the merged estimate
        # is then within tau/2 of true time.
        tau = 100
        est = merge_estimate(t - dtx, t - drx, tau)
        assert abs(est - t) <= Fraction(tau, 2)
