import numpy as np
import pytest

from abpe import BpeModel, Corpus, FormatError

from oracles import (
    bpe_encode_stepwise,
    bpe_pair_counts,
    bpe_train_merges,
    random_small_corpus,
)
from abpe import synth_corpus


def test_vocab_equal_to_base_means_identity():
    corpus = Corpus([[0, 1, 0, 1]], 2)
    model = BpeModel.train(corpus, 2)
    assert model.merges == []
    assert model.encode([0, 1, 1, 0]) == [0, 1, 1, 0]


def test_single_merge_on_abab_corpus():
    # pair (0,1) occurs 3 times, (1,0) once
    corpus = Corpus([[0, 1, 0, 1], [0, 1]], 2)
    assert bpe_pair_counts(corpus.utterances) == {(0, 1): 3, (1, 0): 1}
    model = BpeModel.train(corpus, 3)
    assert model.merges == [(0, 1)]


def test_nonoverlapping_counting_on_runs():
    counts = {}
    from abpe.bpe import _count_pairs

    _count_pairs([7, 7, 7], counts)
    assert counts == {(7, 7): 1}
    counts = {}
    _count_pairs([7, 7, 7, 7], counts)
    assert counts == {(7, 7): 2}
    counts = {}
    _count_pairs([7, 7, 3], counts)
    assert counts == {(7, 7): 1, (7, 3): 1}


def test_encode_priority_example():
    model = BpeModel(2, [(0, 1)])
    assert model.encode([0, 1, 0, 1, 1]) == [2, 2, 1]


def test_encode_requires_base_ids():
    model = BpeModel(2, [(0, 1)])
    with pytest.raises(ValueError, match="base alphabet"):
        model.encode([2])


def test_decode_single_merge():
    model = BpeModel(2, [(0, 1)])
    assert model.decode([2]) == [0, 1]
    assert model.decode([0, 1, 2]) == [0, 1, 0, 1]


def test_decode_base_only_unchanged():
    model = BpeModel(4, [(0, 1), (4, 2)])
    assert model.decode([3, 2, 1]) == [3, 2, 1]


def test_decode_rejects_out_of_range():
    model = BpeModel(2, [(0, 1)])
    with pytest.raises(ValueError, match="out of range"):
        model.decode([3])


def test_unit_len_tracks_merge_tree():
    model = BpeModel(3, [(0, 1), (3, 2), (4, 4)])
    assert [model.unit_len(u) for u in range(6)] == [1, 1, 1, 2, 3, 6]


def test_trainer_matches_oracle_on_random_small_corpora():
    rng = np.random.default_rng(21)
    for _ in range(120):
        corpus = random_small_corpus(rng, max_vocab=6, max_utts=8, max_len=12)
        target = corpus.vocab_size + int(rng.integers(0, 12))
        model = BpeModel.train(corpus, target)
        assert model.merges == bpe_train_merges(corpus, target)


def test_encode_matches_stepwise_oracle():
    rng = np.random.default_rng(22)
    for _ in range(60):
        corpus = random_small_corpus(rng, max_vocab=5, max_utts=6, max_len=14)
        model = BpeModel.train(corpus, corpus.vocab_size + int(rng.integers(1, 10)))
        for _ in range(5):
            seq = [
                int(t)
                for t in rng.integers(0, corpus.vocab_size, size=int(rng.integers(0, 25)))
            ]
            assert model.encode(seq) == bpe_encode_stepwise(
                model.base_size, model.merges, seq
            )


def test_roundtrip_random_sequences():
    rng = np.random.default_rng(23)
    for _ in range(30):
        corpus = random_small_corpus(rng, max_vocab=8, max_utts=10, max_len=20)
        model = BpeModel.train(corpus, corpus.vocab_size + int(rng.integers(0, 15)))
        for _ in range(20):
            seq = [
                int(t)
                for t in rng.integers(0, corpus.vocab_size, size=int(rng.integers(1, 60)))
            ]
            assert model.decode(model.encode(seq)) == seq


def test_expanded_unit_lengths_conserved():
    rng = np.random.default_rng(24)
    corpus = random_small_corpus(rng, max_vocab=6, max_utts=8, max_len=20)
    model = BpeModel.train(corpus, corpus.vocab_size + 10)
    for utt in corpus.utterances:
        encoded = model.encode(utt)
        assert sum(model.unit_len(u) for u in encoded) == len(utt)


def _small_motif():
    from abpe import SynthSpec

    return synth_corpus(
        SynthSpec(30, 40, (20, 40), 3, (3, 5), 0.5, 1.2, seed=13)
    )


def test_training_shrinks_corpus_when_merges_exist():
    corpus = _small_motif()
    model = BpeModel.train(corpus, corpus.vocab_size + 20)
    assert len(model.merges) >= 1
    encoded = model.encode_corpus(corpus)
    assert encoded.total_tokens() < corpus.total_tokens()


def test_monotone_vocabulary_prefix_property():
    corpus = _small_motif()
    full = BpeModel.train(corpus, corpus.vocab_size + 25)
    for m in (0, 5, 12):
        partial = BpeModel.train(corpus, corpus.vocab_size + m)
        assert partial.merges == full.merges[:m]


def test_training_is_deterministic():
    corpus = _small_motif()
    a = BpeModel.train(corpus, corpus.vocab_size + 15)
    b = BpeModel.train(corpus, corpus.vocab_size + 15)
    assert a == b and a.dumps() == b.dumps()


def test_stops_when_no_pair_repeats():
    corpus = Corpus([[0, 1, 2, 3]], 4)
    model = BpeModel.train(corpus, 100)
    assert model.merges == []


def test_empty_corpus_rejected():
    with pytest.raises(ValueError, match="empty"):
        BpeModel.train(Corpus([], 4), 10)


def test_vocab_below_base_rejected():
    with pytest.raises(ValueError, match="below"):
        BpeModel.train(Corpus([[0, 1]], 2), 1)


def test_exact_round_count_with_paper_scale_base(tmp_path):
    # base alphabet of 2000 with exactly 50 supportable merges
    utts = []
    for i in range(50):
        a, b = 2 * i, 2 * i + 1
        utts.append([a, b, a, b])
    corpus = Corpus(utts + [[1999]], 2000)
    model = BpeModel.train(corpus, 2050)
    assert model.base_size == 2000
    assert len(model.merges) == 50 == 2050 - 2000


class TestMergesFile:
    def test_exact_bytes_for_tiny_model(self, tmp_path):
        path = tmp_path / "m.merges"
        BpeModel(2, [(0, 1)]).save(str(path))
        assert path.read_text(encoding="utf-8") == "#abpe 1\n#base 2\n0 1\n"

    def test_roundtrip_trained_model(self, tmp_path):
        corpus = _small_motif()
        model = BpeModel.train(corpus, corpus.vocab_size + 25)
        path = tmp_path / "m.merges"
        model.save(str(path))
        assert BpeModel.load(str(path)) == model

    def test_dangling_unit_reference_rejected(self, tmp_path):
        path = tmp_path / "m.merges"
        path.write_text("#abpe 1\n#base 2\n0 1\n0 7\n1 2\n", encoding="utf-8")
        with pytest.raises(FormatError, match="out of range"):
            BpeModel.load(str(path))

    def test_duplicate_merge_rejected(self, tmp_path):
        path = tmp_path / "m.merges"
        path.write_text("#abpe 1\n#base 2\n0 1\n0 1\n", encoding="utf-8")
        with pytest.raises(FormatError, match="duplicate"):
            BpeModel.load(str(path))

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "m.merges"
        path.write_text("#abpe 9\n#base 2\n0 1\n", encoding="utf-8")
        with pytest.raises(FormatError, match="version"):
            BpeModel.load(str(path))
