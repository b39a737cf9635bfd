"""Architecture parsing, connect relations and the built-in 14x12 array."""

import pytest

from mapcost import ConfigError, arch_from_dict, eyeriss_like, parse_arch, render_arch

FIG_STYLE = """
params:
  e_act: 1.0
  e_idle: 0.1
  e_multi: 0.2
  e_inter: 0.2
  lat_avg: 1
  bus_width_B: 8
  f_accel: 1.0e+9
  f_dma: 5.0e+8
  dma_init: 10
levels:
  - name: L3
    parent: null
    grid: [1, 1]
    capacity_bytes: 1073741824
    read_energy: 100.0
    write_energy: 100.0
  - name: L2
    parent: L3
    grid: [1, 1]
    capacity_bytes: 65536
    read_energy: 4.0
    write_energy: 4.0
  - name: L1
    parent: L2
    grid: [4, 4]
    capacity_bytes: 96
    read_energy: 1.0
    write_energy: 1.0
    connect:
      - rel: "{[x, y] -> [x, y - 1]}"
        array: I
    per_operand:
      I: ifmap_spad
      W: weight_spad
      O: psum_spad
"""


class TestParsing:
    def test_fig_style_parses(self):
        spec = parse_arch(FIG_STYLE)
        assert [lv.name for lv in spec.levels] == ["L3", "L2", "L1"]
        assert spec.level("L1").grid == (4, 4)
        assert dict(spec.level("L1").per_operand)["I"] == "ifmap_spad"
        assert spec.params.pe_size == 16

    def test_round_trip(self):
        spec = parse_arch(FIG_STYLE)
        assert parse_arch(render_arch(spec)) == spec
        assert parse_arch(render_arch(eyeriss_like())) == eyeriss_like()

    def test_single_level(self):
        spec = arch_from_dict({"levels": [
            {"name": "dram", "parent": None, "grid": [1, 1], "capacity_bytes": 1024}]})
        assert spec.root is spec.leaf

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            arch_from_dict({"levels": [
                {"name": "a", "parent": None, "grid": [1, 1], "latency": 3}]})

    def test_dangling_parent(self):
        with pytest.raises(ConfigError):
            arch_from_dict({"levels": [
                {"name": "a", "parent": None, "grid": [1, 1]},
                {"name": "b", "parent": "nope", "grid": [1, 1]}]})

    def test_order_must_follow_parents(self):
        with pytest.raises(ConfigError):
            arch_from_dict({"levels": [
                {"name": "a", "parent": None, "grid": [1, 1]},
                {"name": "c", "parent": "b", "grid": [1, 1]},
                {"name": "b", "parent": "a", "grid": [1, 1]}]})

    def test_root_must_be_first(self):
        with pytest.raises(ConfigError):
            arch_from_dict({"levels": [
                {"name": "a", "parent": "b", "grid": [1, 1]}]})

    def test_pe_size_mismatch(self):
        with pytest.raises(ConfigError):
            arch_from_dict({
                "params": {"pe_size": 10},
                "levels": [{"name": "a", "parent": None, "grid": [4, 4]}]})

    def test_bad_grid(self):
        with pytest.raises(ConfigError):
            arch_from_dict({"levels": [
                {"name": "a", "parent": None, "grid": [0, 1]}]})


class TestConnectRelations:
    def _grid4(self, rel, array=None):
        doc = {"levels": [
            {"name": "root", "parent": None, "grid": [1, 1]},
            {"name": "pe", "parent": "root", "grid": [4, 4],
             "connect": [{"rel": rel, **({"array": array} if array else {})}]}]}
        return arch_from_dict(doc)

    def test_down_neighbor_has_12_pairs(self):
        spec = self._grid4("{[x, y] -> [x, y - 1]}")
        assert spec.connect_relation("pe").cardinality == 12

    def test_empty_connect(self):
        spec = arch_from_dict({"levels": [
            {"name": "root", "parent": None, "grid": [1, 1]},
            {"name": "pe", "parent": "root", "grid": [4, 4]}]})
        assert spec.connect_relation("pe").cardinality == 0

    def test_vector_chain(self):
        spec = arch_from_dict({"levels": [
            {"name": "root", "parent": None, "grid": [1, 1]},
            {"name": "pe", "parent": "root", "grid": [16, 1],
             "connect": [{"rel": "{[x] -> [x - 1]}"}]}]})
        assert spec.connect_relation("pe").cardinality == 15

    def test_out_of_grid_dropped_and_reported(self):
        spec = self._grid4("{[x, y] -> [x, y - 5]}")
        rel, report = spec.connect_relation("pe", with_report=True)
        assert rel.cardinality == 0
        (src, kept, dropped), = report
        assert kept == 0 and dropped == 16

    def test_array_scoping(self):
        spec = self._grid4("{[x, y] -> [x - 1, y]}", array="W")
        assert spec.connect_relation("pe", array="W").cardinality == 12
        assert spec.connect_relation("pe", array="I").cardinality == 0
        # untagged request returns the union of all entries
        assert spec.connect_relation("pe").cardinality == 12

    def test_unknown_level(self):
        spec = self._grid4("{[x, y] -> [x, y - 1]}")
        with pytest.raises(ConfigError):
            spec.connect_relation("nope")


class TestEyerissLike:
    def test_grid_and_pe_size(self):
        spec = eyeriss_like()
        assert spec.leaf.grid == (14, 12)
        assert spec.params.pe_size == 168

    def test_virtual_noc(self):
        spec = eyeriss_like()
        assert spec.level("noc").virtual
        assert not spec.level("glb").virtual
        assert spec.physical_levels() == (
            spec.level("dram"), spec.level("glb"), spec.level("rf"))

    def test_output_connect_present(self):
        spec = eyeriss_like()
        srcs = [c.rel.src for c in spec.level("rf").connects if c.array == "O"]
        assert srcs == ["{[x, y] -> [x, y - 1]}"]
        # downward propagation: 14 columns, 11 in-grid targets each
        assert spec.connect_relation("rf", array="O").cardinality == 14 * 11
