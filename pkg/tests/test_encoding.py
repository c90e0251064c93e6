import numpy as np
import pytest

from dme_driver.encoding.encoder import EncoderParams, TextEncoding, build_occ_text, encode, encode_text
from dme_driver.encoding.fusion import bev_tokens, logical_fuse, project_bev_channels, tokens_to_grid
from dme_driver.encoding.vocab import EMPTY, PAD, UNK, Vocabulary
from dme_driver.exceptions import ContractError, RecordFormatError, ShapeError
from dme_driver.models.scene import BevGrid, GridSpec
from dme_driver.nn import ops
from dme_driver.nn.attention import AttentionParams
from dme_driver.nn.gradcheck import grad_check
from dme_driver.nn.layers import Linear
from dme_driver.nn.tape import Matrix


def test_tokenize_examples(vocab):
    assert vocab.tokenize("Turn left.") == [vocab.id("turn"), vocab.id("left")]
    assert vocab.tokenize("") == [EMPTY]
    assert vocab.tokenize("zzzunknownzzz") == [UNK]


def test_reserved_ids(vocab):
    assert vocab.tokens[PAD] == "<pad>"
    assert vocab.tokens[UNK] == "<unk>"
    assert vocab.tokens[EMPTY] == "<empty>"


def test_vocabulary_save_load_keeps_ids(vocab, tmp_path):
    path = tmp_path / "vocab.tsv"
    vocab.save(path)
    loaded = Vocabulary.load(path)
    assert loaded.tokens == vocab.tokens
    assert path.read_text(encoding="utf-8").splitlines()[3] == f"{vocab.tokens[3]}\t3"


def test_vocabulary_rejects_gaps(tmp_path):
    path = tmp_path / "vocab.tsv"
    path.write_text("<pad>\t0\n<unk>\t1\n<empty>\t2\nleft\t4\n", encoding="utf-8")
    with pytest.raises(RecordFormatError, match="line 4"):
        Vocabulary.load(path)


def test_zero_embeddings_leave_positional_rows():
    p = EncoderParams.zeros(vocab_size=10, dim=8, max_len=16)
    enc = encode_text([5], p)
    assert np.array_equal(enc.matrix.value, p.positional[:1])


def test_encoding_shape():
    p = EncoderParams.init(np.random.default_rng(0), vocab_size=10, dim=8, max_len=16)
    enc = encode_text([3, 4, 5, 6], p)
    assert (enc.n, enc.d) == (4, 8)


def test_positions_distinguish_permutations():
    p = EncoderParams.init(np.random.default_rng(0), vocab_size=10, dim=8, max_len=16)
    assert not np.array_equal(encode_text([3, 4], p).matrix.value, encode_text([4, 3], p).matrix.value)


def test_out_of_range_id():
    p = EncoderParams.zeros(vocab_size=10, dim=8, max_len=16)
    with pytest.raises(ContractError):
        encode_text([10], p)
    with pytest.raises(ContractError):
        encode_text([], p)


def test_occ_text_concatenates(vocab):
    p = EncoderParams.init(np.random.default_rng(0), len(vocab), dim=8, max_len=64)
    gaze, description = "I am looking at the road", "I am on a straight road"
    occ = build_occ_text(gaze, description, vocab, p)
    first = encode(gaze, vocab, p)
    assert occ.n == first.n + encode(description, vocab, p).n
    assert np.array_equal(occ.matrix.value[: first.n], first.matrix.value)
    assert build_occ_text("", "", vocab, p).n == 2


def random_bev(rng, n=16, d=8):
    return Matrix(rng.normal(size=(n, d)))


def random_text(rng, n=5, d=8):
    return TextEncoding(tuple(range(n)), Matrix(rng.normal(size=(n, d))))


def test_fuse_is_identity_with_zero_output_projection():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p = AttentionParams.init(rng, dim=8, num_heads=2)
        p.output = Matrix.zeros(8, 8)
        b = random_bev(rng)
        assert np.array_equal(logical_fuse(b, random_text(rng, n=int(rng.integers(1, 9))), p).value, b.value)


def test_fuse_with_one_token():
    rng = np.random.default_rng(8)
    p = AttentionParams.init(rng, dim=8, num_heads=2)
    b, t = random_bev(rng), random_text(rng, n=1)
    shift = np.concatenate([t.matrix.value @ v.value for v in p.value], axis=1) @ p.output.value
    assert np.allclose(logical_fuse(b, t, p).value, b.value + shift, atol=1e-12)


def test_fuse_ignores_text_order():
    rng = np.random.default_rng(9)
    p = AttentionParams.init(rng, dim=8, num_heads=2)
    b, t = random_bev(rng), random_text(rng, n=6)
    base = logical_fuse(b, t, p).value
    for _ in range(50):
        perm = rng.permutation(6)
        shuffled = TextEncoding(tuple(np.array(t.ids)[perm]), Matrix(t.matrix.value[perm]))
        assert np.abs(logical_fuse(b, shuffled, p).value - base).max() <= 1e-12


def test_fuse_dim_mismatch():
    rng = np.random.default_rng(10)
    p = AttentionParams.init(rng, dim=8, num_heads=2)
    with pytest.raises(ShapeError):
        logical_fuse(random_bev(rng, d=4), random_text(rng), p)


def test_fuse_gradients():
    rng = np.random.default_rng(12)
    p = AttentionParams.init(rng, dim=8, num_heads=2)
    b = Matrix(rng.normal(size=(6, 8)), requires_grad=True)
    t = TextEncoding((0, 1, 2), Matrix(rng.normal(size=(3, 8)), requires_grad=True))

    def loss(*_):
        return ops.mean_all(ops.square(logical_fuse(b, t, p)))

    assert grad_check(loss, [b, t.matrix, *p.parameters().values()]) < 1e-4


def small_grid(size, channels, rng):
    spec = GridSpec(size=size)
    return BevGrid(rng.normal(size=(size, size, channels)), np.zeros((7, size, size), dtype=np.uint8), spec)


def test_identity_projection_keeps_cells_in_row_major_order():
    rng = np.random.default_rng(13)
    grid = small_grid(2, 4, rng)
    identity = Linear(Matrix(np.eye(4)), Matrix.zeros(1, 4))
    tokens = project_bev_channels(grid, identity).value
    assert np.array_equal(tokens, [grid.features[0, 0], grid.features[0, 1], grid.features[1, 0], grid.features[1, 1]])


def test_token_reshape_round_trip():
    rng = np.random.default_rng(14)
    grid = small_grid(4, 16, rng)
    assert np.array_equal(tokens_to_grid(bev_tokens(grid), grid.spec), grid.features)


def test_projection_shape():
    rng = np.random.default_rng(15)
    grid = small_grid(4, 16, rng)
    assert project_bev_channels(grid, Linear.init(rng, 16, 32)).shape == (16, 32)
    with pytest.raises(ShapeError):
        project_bev_channels(grid, Linear.init(rng, 8, 32))
