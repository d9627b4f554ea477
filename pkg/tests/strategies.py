from fractions import Fraction

from hypothesis import strategies as st

from monodimer.formal_series import BiSeries

small_rats = st.builds(
    Fraction,
    st.integers(-12, 12),
    st.integers(1, 9),
)


def bi_series(p_trunc: int = 4, max_j: int = 4, min_i: int = 0):
    keys = st.tuples(st.integers(min_i, p_trunc), st.integers(0, max_j))
    return st.dictionaries(keys, small_rats, max_size=8).map(lambda t: BiSeries(t, p_trunc))
