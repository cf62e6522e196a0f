import pytest

from src.ferro_fhd.decorators import create_cacher, log_time
from src.ferro_fhd.utils import format_float, load_csv, load_json, save_csv, save_json


@pytest.mark.parametrize(
    "value, text",
    [
        (0.5, "0.5"),
        (1.234567, "1.23457"),
        (1.234561e-4, "1.23456e-04"),
        (0.0, "0"),
        (1234567.0, "1.23457e+06"),
        (-2.5e-5, "-2.50000e-05"),
        (float("nan"), "nan"),
    ],
)
def test_format_float(value, text):
    assert format_float(value) == text


def test_save_csv(tmp_path):
    path = tmp_path / "nested" / "table.csv"
    save_csv(str(path), ["K", "h", "name"], [[4, 0.25, "order"], [8, 1e-5, ""]])
    assert path.read_text(encoding="utf-8") == (
        "K,h,name\n4,0.25,order\n8,1.00000e-05,\n"
    )
    assert load_csv(str(path))[1] == ["4", "0.25", "order"]


def test_save_json(tmp_path):
    path = tmp_path / "out" / "run.json"
    data = {"b": [1, 2], "a": "тест"}
    save_json(str(path), data)
    text = path.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')
    assert "тест" in text and text.endswith("\n")
    assert load_json(str(path)) == data


def test_cacher():
    cache = create_cacher()
    calls = []
    assert cache("key", lambda: calls.append(1) or 42) == 42
    assert cache("key", lambda: calls.append(1) or 0) == 42
    assert calls == [1]
    assert cache.stats() == {"hits": 1, "misses": 1, "size": 1}
    cache.clear("key")
    assert cache.stats()["size"] == 0


def test_log_time(capsys):
    @log_time
    def work():
        return 7

    assert work() == 7
    assert "work" in capsys.readouterr().out
