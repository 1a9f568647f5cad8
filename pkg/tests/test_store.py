import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fdbench.errors import CorruptionError, FormatError, ParseError, ValidationError
from fdbench.store import (FeatureSet, import_csv, read_feature_set,
                           write_feature_set)


def make_fs(data, **kw):
    kw.setdefault("extractor_id", "test")
    kw.setdefault("role", "generated")
    return FeatureSet(data=np.asarray(data, dtype=np.float32), **kw)


class TestFeatureSetInvariants:
    def test_empty_matrix_rejected(self):
        with pytest.raises(ValidationError):
            make_fs(np.empty((0, 3)))

    def test_zero_width_rejected(self):
        with pytest.raises(ValidationError):
            make_fs(np.empty((3, 0)))

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            make_fs([[1.0, np.nan]])

    def test_inf_rejected(self):
        with pytest.raises(ValidationError):
            make_fs([[1.0, np.inf]])

    def test_bad_role_rejected(self):
        with pytest.raises(ValidationError):
            make_fs([[1.0]], role="fake")

    def test_bad_preprocessing_rejected(self):
        with pytest.raises(ValidationError):
            make_fs([[1.0]], preprocessing_tag="bicubic")

    def test_data_is_immutable(self):
        fs = make_fs([[1.0, 2.0]])
        with pytest.raises(ValueError):
            fs.data[0, 0] = 5.0


class TestRoundTrip:
    def test_small_matrix(self, tmp_path):
        fs = make_fs([[1, 2, 3], [4, 5, 6]], role="real_test",
                     source_id="abc")
        path = tmp_path / "m.fdbf"
        write_feature_set(fs, path)
        back = read_feature_set(path)
        assert np.array_equal(back.data, fs.data)
        assert back.metadata() == fs.metadata()

    def test_nan_never_written(self, tmp_path):
        path = tmp_path / "bad.fdbf"
        with pytest.raises(ValidationError):
            make_fs([[np.nan]])
        assert not path.exists()

    @settings(max_examples=30, deadline=None)
    @given(data=arrays(np.float32,
                       st.tuples(st.integers(1, 8), st.integers(1, 6)),
                       elements=st.floats(-1e6, 1e6, width=32)),
           role=st.sampled_from(["generated", "real_test", "real_train"]),
           source=st.text(max_size=12))
    def test_roundtrip_identity(self, data, role, source, tmp_path_factory):
        fs = FeatureSet(data=data, extractor_id="hyp", role=role,
                        source_id=source)
        path = tmp_path_factory.mktemp("rt") / "x.fdbf"
        write_feature_set(fs, path)
        back = read_feature_set(path)
        assert back.data.tobytes() == fs.data.tobytes()
        assert back.metadata() == fs.metadata()


class TestCorruptionDetection:
    def _write(self, tmp_path):
        fs = make_fs(np.arange(24, dtype=np.float32).reshape(4, 6) + 1)
        path = tmp_path / "m.fdbf"
        write_feature_set(fs, path)
        return path

    def test_bad_magic(self, tmp_path):
        path = self._write(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[:5] = b"XXXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            read_feature_set(path)

    def test_truncated_payload(self, tmp_path):
        path = self._write(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[:-7])
        with pytest.raises(CorruptionError):
            read_feature_set(path)

    def test_single_byte_flip_detected(self, tmp_path):
        path = self._write(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[-3] ^= 0x40
        path.write_bytes(bytes(raw))
        with pytest.raises(CorruptionError):
            read_feature_set(path)

    def test_every_payload_byte_position_is_covered(self, tmp_path):
        # flip each payload byte of a tiny file in turn
        fs = make_fs([[1.0, 2.0]])
        path = tmp_path / "tiny.fdbf"
        write_feature_set(fs, path)
        raw = path.read_bytes()
        payload_start = len(raw) - 8
        for pos in range(payload_start, len(raw)):
            corrupted = bytearray(raw)
            corrupted[pos] ^= 0x01
            path.write_bytes(bytes(corrupted))
            with pytest.raises(CorruptionError):
                read_feature_set(path)

    def test_reader_never_returns_invalid_role(self, tmp_path):
        # tamper with metadata only: checksum still passes, validation must not
        fs = make_fs([[1.0, 2.0]])
        path = tmp_path / "meta.fdbf"
        write_feature_set(fs, path)
        raw = path.read_bytes()
        tampered = raw.replace(b'"generated"', b'"hijacked!"')
        assert len(tampered) == len(raw)
        path.write_bytes(tampered)
        with pytest.raises(CorruptionError):
            read_feature_set(path)


class TestCsvImport:
    def test_basic(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("1,2\n3,4\n")
        fs = import_csv(p, extractor_id="csv", role="real_train")
        assert fs.data.tolist() == [[1.0, 2.0], [3.0, 4.0]]
        assert fs.role == "real_train"

    def test_ragged_row(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(FormatError):
            import_csv(p, extractor_id="csv")

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("1,a\n")
        with pytest.raises(ParseError):
            import_csv(p, extractor_id="csv")

    def test_nan_cell_rejected(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("1,nan\n")
        with pytest.raises(ValidationError):
            import_csv(p, extractor_id="csv")
