"""SPI model: frame layout, register bank rules, memory window, scripts."""

import pytest
from hypothesis import given, strategies as st

from snncosim.core import NetworkConfig, NetworkState, init_weights
from snncosim.errors import SpiError
from snncosim.spi import (
    MEM_WINDOW_BASE,
    REG_ALPHA_LSB,
    REG_KAPPA,
    REG_LR_SHIFT,
    REG_N_HID,
    REG_N_IN,
    REG_N_OUT,
    REG_THRESHOLD,
    REGISTERS,
    ParamBank,
    ScriptReport,
    SpiFrame,
    load_config_script,
    network_config_from_bank,
    pack_lr_shift,
    script_from_file,
    script_to_file,
    spi_transfer,
    unpack_lr_shift,
)


class TestFrame:
    def test_write_frame_layout(self):
        f = SpiFrame.write(0x0001, 0x00FE)
        assert f.raw == 0x800100FE
        assert f.is_write and f.addr == 1 and f.data == 0xFE

    def test_read_frame_layout(self):
        f = SpiFrame.read(0x4002)
        assert f.raw == 0x40020000
        assert not f.is_write and f.addr == 0x4002

    def test_field_bounds(self):
        with pytest.raises(SpiError):
            SpiFrame.write(0x8000, 0)
        with pytest.raises(SpiError):
            SpiFrame.write(0, 0x10000)

    @given(st.integers(0, 0x7FFF), st.integers(0, 0xFFFF))
    def test_roundtrip_fields(self, addr, data):
        f = SpiFrame.write(addr, data)
        assert (f.is_write, f.addr, f.data) == (True, addr, data)


class TestRegisters:
    def test_reference_hyperparameter_triple(self):
        bank = ParamBank()
        spi_transfer(bank, SpiFrame.write(REG_THRESHOLD, 0x03F0))
        spi_transfer(bank, SpiFrame.write(REG_ALPHA_LSB, 0x0FE))
        spi_transfer(bank, SpiFrame.write(REG_KAPPA, 0x37))
        assert spi_transfer(bank, SpiFrame.read(REG_THRESHOLD)) == 0x03F0
        assert spi_transfer(bank, SpiFrame.read(REG_ALPHA_LSB)) == 0x0FE
        assert spi_transfer(bank, SpiFrame.read(REG_KAPPA)) == 0x37

    def test_write_echoes_value(self):
        bank = ParamBank()
        assert spi_transfer(bank, SpiFrame.write(REG_N_IN, 40)) == 40

    def test_unassigned_read_returns_zero(self):
        bank = ParamBank()
        assert spi_transfer(bank, SpiFrame.read(0x00FE)) == 0

    def test_unassigned_write_rejected(self):
        bank = ParamBank()
        with pytest.raises(SpiError):
            spi_transfer(bank, SpiFrame.write(0x00FE, 1))

    def test_every_assigned_register_roundtrips(self):
        bank = ParamBank()
        for i, addr in enumerate(sorted(REGISTERS.values())):
            spi_transfer(bank, SpiFrame.write(addr, 0x1000 + i))
            assert spi_transfer(bank, SpiFrame.read(addr)) == 0x1000 + i

    def test_reset_values(self):
        bank = ParamBank()
        assert bank.read(REG_THRESHOLD) == 0x03F0
        assert bank.read(REG_ALPHA_LSB) == 0x00FE
        assert bank.read(REG_KAPPA) == 0x0037

    def test_lr_shift_packing(self):
        assert pack_lr_shift(17, 3) == 0x0311
        assert unpack_lr_shift(0x0311) == (17, 3)

    def test_network_config_from_bank(self):
        bank = ParamBank()
        spi_transfer(bank, SpiFrame.write(REG_N_IN, 12))
        spi_transfer(bank, SpiFrame.write(REG_N_HID, 38))
        spi_transfer(bank, SpiFrame.write(REG_N_OUT, 3))
        spi_transfer(bank, SpiFrame.write(REG_LR_SHIFT, pack_lr_shift(9, 2)))
        cfg = network_config_from_bank(bank)
        cfg.validate()
        assert (cfg.n_in, cfg.n_hid, cfg.n_out) == (12, 38, 3)
        assert (cfg.threshold, cfg.alpha, cfg.kappa) == (0x03F0, 0xFE, 0x37)
        assert (cfg.lr_shift_hid, cfg.lr_shift_out) == (9, 2)


class TestMemoryWindow:
    def make_bank(self, n_in=3, n_hid=5, n_out=2):
        cfg = NetworkConfig(n_in=n_in, n_hid=n_hid, n_out=n_out)
        state = NetworkState.zeros(cfg)
        init_weights(state, 9)
        bank = ParamBank()
        bank.attach_state(state)
        return bank, state

    def test_weight_word_roundtrip(self):
        bank, state = self.make_bank()
        spi_transfer(bank, SpiFrame.write(MEM_WINDOW_BASE, 0x7F80))
        assert spi_transfer(bank, SpiFrame.read(MEM_WINDOW_BASE)) == 0x7F80
        # low byte -> w_in[0,0], high byte -> w_in[0,1], two's complement
        assert state.w_in[0, 0] == -128
        assert state.w_in[0, 1] == 127

    def test_window_covers_membranes(self):
        bank, state = self.make_bank()
        state.v_hid[0] = -2
        w_in_words = (state.w_in.size + 1) // 2
        w_rec_words = (state.w_rec.size + 1) // 2
        w_out_words = (state.w_out.size + 1) // 2
        v_hid_base = MEM_WINDOW_BASE + w_in_words + w_rec_words + w_out_words
        assert spi_transfer(bank, SpiFrame.read(v_hid_base)) == 0xFFFE

    def test_every_window_word_roundtrips(self):
        bank, state = self.make_bank()
        total = bank._window_words
        for i in range(total):
            val = (i * 257) & 0xFFFF
            spi_transfer(bank, SpiFrame.write(MEM_WINDOW_BASE + i, val))
        for i in range(total):
            val = (i * 257) & 0xFFFF
            got = spi_transfer(bank, SpiFrame.read(MEM_WINDOW_BASE + i))
            # odd-sized packed regions drop the final pad byte
            assert got == val or got == (val & 0xFF)

    def test_out_of_range_rejected(self):
        bank, _ = self.make_bank()
        with pytest.raises(SpiError):
            spi_transfer(bank, SpiFrame.read(MEM_WINDOW_BASE + 0x3000))

    def test_no_attached_state_rejected(self):
        bank = ParamBank()
        with pytest.raises(SpiError):
            spi_transfer(bank, SpiFrame.read(MEM_WINDOW_BASE))

    def test_odd_sized_region_pad_byte(self):
        bank, state = self.make_bank(n_in=3, n_hid=3, n_out=1)  # w_out 3 bytes
        w_words = (9 + 1) // 2 + (9 + 1) // 2
        w_out_base = MEM_WINDOW_BASE + w_words
        spi_transfer(bank, SpiFrame.write(w_out_base + 1, 0xAB01))
        # only the low byte lands: w_out[0,2]; the pad byte reads back 0
        assert state.w_out[0, 2] == 0x01
        assert spi_transfer(bank, SpiFrame.read(w_out_base + 1)) == 0x0001


class TestScripts:
    def test_empty_script(self):
        report = load_config_script(ParamBank(), [])
        assert report.applied == 0 and report.ok

    def test_script_applies_in_order(self):
        bank = ParamBank()
        frames = [SpiFrame.write(REG_THRESHOLD, 0x03F0),
                  SpiFrame.write(REG_ALPHA_LSB, 0x0FE),
                  SpiFrame.write(REG_KAPPA, 0x37)]
        report = load_config_script(bank, frames)
        assert report.applied == 3 and report.ok
        assert bank.read(REG_KAPPA) == 0x37

    def test_script_stops_at_first_reject(self):
        bank = ParamBank()
        frames = [SpiFrame.write(REG_N_IN, 40),
                  SpiFrame.write(0x00FE, 1),
                  SpiFrame.write(REG_N_HID, 100)]
        report = load_config_script(bank, frames)
        assert report.applied == 1
        assert len(report.rejected) == 1
        assert report.rejected[0][0] == 1
        assert not report.ok
        assert bank.read(REG_N_HID) == 0  # never applied

    def test_permutation_insensitive_for_unique_addresses(self):
        frames = [SpiFrame.write(addr, 100 + addr)
                  for addr in sorted(REGISTERS.values())]
        bank_a, bank_b = ParamBank(), ParamBank()
        load_config_script(bank_a, frames)
        load_config_script(bank_b, list(reversed(frames)))
        for addr in REGISTERS.values():
            assert bank_a.read(addr) == bank_b.read(addr)

    def test_script_file_roundtrip(self, tmp_path):
        path = tmp_path / "cfg.spi"
        frames = [SpiFrame.write(REG_THRESHOLD, 0x03F0),
                  SpiFrame.read(REG_KAPPA)]
        script_to_file(path, frames, header="test script")
        loaded = script_from_file(path)
        assert loaded == frames
