"""File formats: binary/CSV matrices, packed codes, and the JSON-sidecar
checkpoints.  Malformed input must fail loudly with a byte offset, never
produce a silently wrong array."""
import json
import struct

import numpy as np
import pytest

from frosketch.ffd import FfdSketcher
from frosketch.fd import fd_insert, new_sketch
from frosketch.frosh import HashModel, hash_codes, lsh_model
from frosketch.dfrosh import WorkerSummary
from frosketch.io import (
    FormatError,
    fsk1_shape,
    iter_matrix_fsk1,
    load_codes,
    load_matrix,
    load_matrix_csv,
    load_matrix_fsk1,
    load_model,
    load_sketch,
    load_summary,
    save_codes,
    save_matrix,
    save_matrix_csv,
    save_matrix_fsk1,
    save_model,
    save_sketch,
    save_summary,
)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


class TestFsk1:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        a = rng.standard_normal((17, 5)) * 1e-7
        p = tmp_path / "a.fsk1"
        save_matrix_fsk1(a, p)
        np.testing.assert_array_equal(load_matrix_fsk1(p), a)

    def test_header_layout(self, tmp_path):
        p = tmp_path / "m.fsk1"
        save_matrix_fsk1([[1.0, 2.0], [3.0, 4.0]], p)
        raw = p.read_bytes()
        assert raw[:4] == b"FSK1"
        assert struct.unpack("<II", raw[4:12]) == (2, 2)
        assert np.frombuffer(raw, dtype="<f8", offset=12).tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_shape_probe(self, tmp_path, rng):
        p = tmp_path / "m.fsk1"
        save_matrix_fsk1(rng.standard_normal((9, 3)), p)
        assert fsk1_shape(p) == (9, 3)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.fsk1"
        p.write_bytes(b"NOPE" + struct.pack("<II", 1, 1) + b"\x00" * 8)
        with pytest.raises(FormatError, match="bad magic.*at byte 0"):
            load_matrix_fsk1(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "short.fsk1"
        p.write_bytes(b"FSK1\x01")
        with pytest.raises(FormatError, match="truncated header.*at byte 5"):
            load_matrix_fsk1(p)

    def test_truncated_payload(self, tmp_path):
        p = tmp_path / "cut.fsk1"
        save_matrix_fsk1(np.ones((4, 4)), p)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(FormatError, match="expected 128.*at byte 12"):
            load_matrix_fsk1(p)

    def test_trailing_garbage(self, tmp_path):
        p = tmp_path / "long.fsk1"
        save_matrix_fsk1(np.ones((2, 2)), p)
        p.write_bytes(p.read_bytes() + b"junk")
        with pytest.raises(FormatError):
            load_matrix_fsk1(p)

    def test_zero_rows_rejected(self, tmp_path):
        p = tmp_path / "empty.fsk1"
        p.write_bytes(struct.pack("<4sII", b"FSK1", 0, 3))
        with pytest.raises(FormatError, match="empty matrix.*at byte 4"):
            load_matrix_fsk1(p)

    def test_non_finite_payload_rejected(self, tmp_path):
        p = tmp_path / "nan.fsk1"
        p.write_bytes(
            struct.pack("<4sII", b"FSK1", 1, 2) + struct.pack("<dd", 1.0, float("nan"))
        )
        with pytest.raises(FormatError, match="non-finite"):
            load_matrix_fsk1(p)

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_matrix_fsk1(tmp_path / "absent.fsk1")


class TestIterFsk1:
    def test_chunks_reassemble(self, tmp_path, rng):
        a = rng.standard_normal((23, 4))
        p = tmp_path / "m.fsk1"
        save_matrix_fsk1(a, p)
        chunks = list(iter_matrix_fsk1(p, 7))
        assert [c.shape[0] for c in chunks] == [7, 7, 7, 2]
        np.testing.assert_array_equal(np.vstack(chunks), a)

    def test_chunk_larger_than_file(self, tmp_path, rng):
        a = rng.standard_normal((5, 3))
        p = tmp_path / "m.fsk1"
        save_matrix_fsk1(a, p)
        chunks = list(iter_matrix_fsk1(p, 100))
        assert len(chunks) == 1
        np.testing.assert_array_equal(chunks[0], a)

    def test_size_validated_before_first_chunk(self, tmp_path):
        p = tmp_path / "cut.fsk1"
        save_matrix_fsk1(np.ones((10, 2)), p)
        p.write_bytes(p.read_bytes()[:-16])
        it = iter_matrix_fsk1(p, 3)
        with pytest.raises(FormatError, match="payload bytes"):
            next(it)

    def test_rejects_bad_chunk_rows(self, tmp_path):
        with pytest.raises(ValueError, match="chunk_rows"):
            list(iter_matrix_fsk1(tmp_path / "x", 0))


class TestCsv:
    def test_round_trip_float64_exact(self, tmp_path, rng):
        a = rng.standard_normal((6, 3)) * np.pi
        p = tmp_path / "m.csv"
        save_matrix_csv(a, p)
        np.testing.assert_array_equal(load_matrix_csv(p), a)  # 17 digits round-trip

    def test_single_row(self, tmp_path):
        p = tmp_path / "row.csv"
        save_matrix_csv([[1.5, -2.5, 3.5]], p)
        out = load_matrix_csv(p)
        assert out.shape == (1, 3)

    def test_parse_failure(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1.0,2.0\nthree,4.0\n")
        with pytest.raises(FormatError, match="CSV parse failure"):
            load_matrix_csv(p)

    def test_extension_dispatch(self, tmp_path, rng):
        a = rng.standard_normal((4, 2))
        csv_path = tmp_path / "m.csv"
        bin_path = tmp_path / "m.fsk1"
        save_matrix(a, csv_path)
        save_matrix(a, bin_path)
        assert csv_path.read_bytes()[:4] != b"FSK1"
        assert bin_path.read_bytes()[:4] == b"FSK1"
        np.testing.assert_array_equal(load_matrix(csv_path), a)
        np.testing.assert_array_equal(load_matrix(bin_path), a)

    def test_explicit_fmt_overrides_extension(self, tmp_path, rng):
        a = rng.standard_normal((3, 3))
        p = tmp_path / "data.bin"
        save_matrix(a, p, fmt="csv")
        np.testing.assert_array_equal(load_matrix(p, fmt="csv"), a)

    def test_unknown_fmt(self, tmp_path):
        with pytest.raises(ValueError, match="unknown matrix format"):
            save_matrix(np.ones((1, 1)), tmp_path / "x", fmt="parquet")


class TestCodes:
    def test_round_trip(self, tmp_path, rng):
        model = lsh_model(12, 10, 3)
        codes = hash_codes(model, rng.standard_normal((25, 12)))
        p = tmp_path / "c.fskc"
        save_codes(codes, p)
        back = load_codes(p)
        assert (back.n, back.r) == (25, 10)
        np.testing.assert_array_equal(back.bits, codes.bits)

    def test_header_layout(self, tmp_path, rng):
        codes = hash_codes(lsh_model(8, 5, 0), rng.standard_normal((3, 8)))
        p = tmp_path / "c.fskc"
        save_codes(codes, p)
        raw = p.read_bytes()
        assert raw[:4] == b"FSKC"
        assert struct.unpack("<II", raw[4:12]) == (3, 5)
        assert raw[12:16] == b"\x00" * 4
        assert len(raw) == 16 + 3  # one byte per 5-bit code

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.fskc"
        p.write_bytes(b"FSK1" + struct.pack("<II4s", 1, 1, b"\x00" * 4) + b"\x00")
        with pytest.raises(FormatError, match="bad magic"):
            load_codes(p)

    def test_payload_size_checked(self, tmp_path, rng):
        codes = hash_codes(lsh_model(8, 8, 0), rng.standard_normal((4, 8)))
        p = tmp_path / "c.fskc"
        save_codes(codes, p)
        p.write_bytes(p.read_bytes()[:-1])
        with pytest.raises(FormatError, match="payload holds 3"):
            load_codes(p)


class TestSketchCheckpoint:
    def test_fd_round_trip(self, tmp_path, rng):
        s = fd_insert(new_sketch(8, 5), rng.standard_normal((20, 5)))
        p = tmp_path / "sketch.fsk1"
        save_sketch(s, p)
        back = load_sketch(p)
        assert type(back).__name__ == "SketchState"
        np.testing.assert_array_equal(back.b, s.b)
        assert back.occupied == s.occupied
        assert (back.ell, back.d) == (8, 5)

    def test_ffd_resume_is_bit_identical(self, tmp_path, rng):
        # Stop mid-stream with rows waiting in the buffer, checkpoint,
        # restore, continue: must match the uninterrupted run exactly.
        rows = rng.standard_normal((150, 6))
        straight = FfdSketcher(8, 32, 6, seed=7).insert(rows).finalize()

        first = FfdSketcher(8, 32, 6, seed=7).insert(rows[:90])
        assert first.buffered  # the checkpoint must carry a buffer
        p = tmp_path / "ckpt.fsk1"
        save_sketch(first, p)
        resumed = load_sketch(p)
        resumed.insert(rows[90:])
        np.testing.assert_array_equal(resumed.finalize(), straight)

    def test_ffd_sidecar_fields(self, tmp_path, rng):
        sk = FfdSketcher(8, 16, 4, seed=3).insert(rng.standard_normal((20, 4)))
        p = tmp_path / "ckpt.fsk1"
        save_sketch(sk, p)
        meta = json.loads((tmp_path / "ckpt.fsk1.json").read_text())
        assert meta["kind"] == "ffd"
        assert meta["m"] == 16 and meta["seed"] == 3 and meta["trial"] == 1
        assert len(meta["buffer"]) == 4

    def test_missing_sidecar(self, tmp_path, rng):
        p = tmp_path / "s.fsk1"
        save_matrix_fsk1(rng.standard_normal((4, 4)), p)
        with pytest.raises(OSError):
            load_sketch(p)

    def test_corrupt_sidecar(self, tmp_path, rng):
        s = fd_insert(new_sketch(4, 4), rng.standard_normal((4, 4)))
        p = tmp_path / "s.fsk1"
        save_sketch(s, p)
        (tmp_path / "s.fsk1.json").write_text("{not json")
        with pytest.raises(FormatError, match="invalid JSON"):
            load_sketch(p)

    def test_sidecar_shape_disagreement(self, tmp_path, rng):
        s = fd_insert(new_sketch(4, 4), rng.standard_normal((4, 4)))
        p = tmp_path / "s.fsk1"
        save_sketch(s, p)
        meta = json.loads((tmp_path / "s.fsk1.json").read_text())
        meta["ell"] = 6
        (tmp_path / "s.fsk1.json").write_text(json.dumps(meta))
        with pytest.raises(FormatError, match="disagrees"):
            load_sketch(p)

    def test_unknown_kind(self, tmp_path, rng):
        s = fd_insert(new_sketch(4, 4), rng.standard_normal((4, 4)))
        p = tmp_path / "s.fsk1"
        save_sketch(s, p)
        meta = json.loads((tmp_path / "s.fsk1.json").read_text())
        meta["kind"] = "lanczos"
        (tmp_path / "s.fsk1.json").write_text(json.dumps(meta))
        with pytest.raises(FormatError, match="unknown sketch kind"):
            load_sketch(p)

    def test_rejects_other_types(self, tmp_path):
        with pytest.raises(TypeError):
            save_sketch(np.ones((2, 2)), tmp_path / "x")


class TestModelAndSummary:
    def test_model_round_trip(self, tmp_path, rng):
        model = lsh_model(10, 6, 5)
        model = HashModel(w=model.w, mu=rng.standard_normal(10), r=6)
        p = tmp_path / "model.fsk1"
        save_model(model, p)
        back = load_model(p)
        np.testing.assert_array_equal(back.w, model.w)
        np.testing.assert_array_equal(back.mu, model.mu)
        assert back.r == 6

    def test_model_sidecar_mismatch(self, tmp_path):
        model = lsh_model(8, 4, 0)
        p = tmp_path / "model.fsk1"
        save_model(model, p)
        meta = json.loads((tmp_path / "model.fsk1.json").read_text())
        meta["r"] = 3
        (tmp_path / "model.fsk1.json").write_text(json.dumps(meta))
        with pytest.raises(FormatError, match="disagree"):
            load_model(p)

    def test_summary_round_trip(self, tmp_path, rng):
        s = WorkerSummary(
            b=rng.standard_normal((8, 5)), mu=rng.standard_normal(5), n=321, worker_id=4
        )
        p = tmp_path / "w4.fsk1"
        save_summary(s, p)
        back = load_summary(p)
        np.testing.assert_array_equal(back.b, s.b)
        np.testing.assert_array_equal(back.mu, s.mu)
        assert (back.n, back.worker_id) == (321, 4)

    def test_summary_bad_sidecar(self, tmp_path, rng):
        s = WorkerSummary(b=rng.standard_normal((4, 3)), mu=np.zeros(3), n=5, worker_id=0)
        p = tmp_path / "w.fsk1"
        save_summary(s, p)
        meta = json.loads((tmp_path / "w.fsk1.json").read_text())
        del meta["n"]
        (tmp_path / "w.fsk1.json").write_text(json.dumps(meta))
        with pytest.raises(FormatError, match="bad summary sidecar"):
            load_summary(p)
