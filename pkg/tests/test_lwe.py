import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pirdns.pir import LweParams, dec, enc, eval_add, eval_pt_mul
from pirdns.pir import lwe
from pirdns.pir.lwe import NoiseOverflowError
from pirdns.randomness import SecureRandom

PARAMS = LweParams()
SECRET = lwe.keygen(PARAMS, SecureRandom(seed=7))


def test_zero_roundtrip():
    assert dec(PARAMS, SECRET, enc(PARAMS, SECRET, 0)) == 0


def test_add_wraps_mod_p():
    c = eval_add(PARAMS, enc(PARAMS, SECRET, 3), enc(PARAMS, SECRET, 250))
    assert dec(PARAMS, SECRET, c) == (3 + 250) % 256


@settings(max_examples=50, deadline=None)
@given(x=st.integers(0, 255), y=st.integers(0, 255), c=st.integers(0, 255))
def test_homomorphism_identities(x, y, c):
    cx, cy = enc(PARAMS, SECRET, x), enc(PARAMS, SECRET, y)
    assert dec(PARAMS, SECRET, cx) == x
    assert dec(PARAMS, SECRET, eval_add(PARAMS, cx, cy)) == (x + y) % 256
    # one-hot style multiplier keeps the noise small enough for exact decryption
    bit = enc(PARAMS, SECRET, 1)
    assert dec(PARAMS, SECRET, eval_pt_mul(PARAMS, c, bit)) == c


def test_max_fan_in_sum_decrypts(nprng):
    # 2**12 plaintext-times-ciphertext terms accumulated one by one
    fan_in = 1 << 12
    rng = SecureRandom(seed=99)
    bits = nprng.integers(0, 2, fan_in)
    digits = nprng.integers(0, 256, fan_in)
    cts = lwe.encrypt_batch(PARAMS, SECRET, bits, rng)
    acc = eval_pt_mul(PARAMS, int(digits[0]), lwe.Ciphertext.from_row(cts[0]))
    for d, row in zip(digits[1:], cts[1:]):
        acc = eval_add(PARAMS, acc, eval_pt_mul(PARAMS, int(d), lwe.Ciphertext.from_row(row)))
    expected = int((bits * digits).sum() % 256)
    assert dec(PARAMS, SECRET, acc) == expected


def test_batched_inner_product_matches_scalar_loop(nprng):
    rng = SecureRandom(seed=5)
    cts = lwe.encrypt_batch(PARAMS, SECRET, nprng.integers(0, 2, 64), rng)
    plain = nprng.integers(0, 256, (3, 64))
    fast = lwe.plaintext_inner_product(PARAMS, plain, cts)
    slow = (plain.astype(np.uint64) @ cts.astype(np.uint64)) % (1 << 32)
    assert np.array_equal(fast, slow.astype(np.uint32))


def test_small_modulus_masks_words():
    params = LweParams(n=64, q_bits=20, p_bits=4, n1=8)
    secret = lwe.keygen(params, SecureRandom(seed=1))
    cts = lwe.encrypt_batch(params, secret, np.arange(8) % 16, SecureRandom(seed=2))
    assert cts.max() < params.q
    assert list(lwe.decrypt_batch(params, secret, cts)) == list(np.arange(8) % 16)


def test_noise_overflow_is_reported():
    ct = enc(PARAMS, SECRET, 5).to_row()
    ct[-1] += np.uint32(PARAMS.delta // 3)
    with pytest.raises(NoiseOverflowError):
        lwe.decrypt_batch(PARAMS, SECRET, ct[None, :])
