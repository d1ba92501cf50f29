"""Experiment runner: single transmissions, SNR sweeps, rate sweeps, edits.

Every run is a pure function of (config, seed): trial seeds derive from the
base seed and the grid position, never from the clock. Comparisons between
transports are refused unless both occupied the same number of channel
symbols per trial.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import codec
from .codec import Bitstream, QuantizationSpec, decode_payload, encode_payload
from .errors import FairnessError
from .features import (
    EditCommand,
    ExtractionProfile,
    FixedCaption,
    SemanticPayload,
    decompose,
    edit_payload,
)
from .imaging import GrayImage, RgbImage, read_rgb_png, write_png
from .metrics import TransmissionReport, mse, psnr
from .phy import (
    ChannelConfig,
    make_fec,
    make_modulation,
    transmit_analog,
    transmit_digital,
)
from .restore import (
    FeatureOnlyBackend,
    RestorationRequest,
    RestorerBackend,
    make_backend,
    restore,
)
from .seeding import derive_seed

CSV_SCHEMA_VERSION = 1

# 32 bytes exactly: keeps the low-rate profile's text cost predictable
EXTREME_CAPTION = "a photograph of a natural scene."

PROFILES: dict[str, tuple[ExtractionProfile, QuantizationSpec]] = {
    "default": (
        ExtractionProfile(color_grid=(32, 32), texture_grid=(64, 64), median_radius=1),
        QuantizationSpec(color_bits=8, texture_bits=8, texture_palette=False),
    ),
    "extreme": (
        ExtractionProfile(color_grid=(24, 24), texture_grid=(64, 64), median_radius=2,
                          caption_source=FixedCaption(EXTREME_CAPTION)),
        QuantizationSpec(color_bits=8, texture_bits=2, texture_palette=True),
    ),
    "tiny": (
        ExtractionProfile(color_grid=(1, 1), texture_grid=(1, 1), median_radius=1),
        QuantizationSpec(color_bits=2, texture_bits=1, texture_palette=False),
    ),
    "fine": (
        ExtractionProfile(color_grid=(64, 64), texture_grid=(128, 128), median_radius=1),
        QuantizationSpec(color_bits=8, texture_bits=8, texture_palette=False),
    ),
}

BPP_LADDER = ("tiny", "extreme", "default", "fine")


def get_profile(name: str) -> tuple[ExtractionProfile, QuantizationSpec]:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; built-ins: {sorted(PROFILES)}")
    return PROFILES[name]


@dataclass
class RunConfig:
    image: Path
    profile: str = "default"
    transport: str = "digital"        # digital | analog | both (sweeps only)
    modulation: str = "16qam"
    fec: str = "ldpc"
    snr_db: float = 10.0
    snr_list: tuple[float, ...] = ()  # sweep grid; empty means single snr_db
    seed: int = 0
    trials: int = 1
    backend: str = "fallback"         # fallback | remote | none
    endpoint: str | None = None
    luminance_gain: float = 1.0
    out_dir: Path = Path("runs")
    profiles: tuple[str, ...] = BPP_LADDER  # rate-sweep ladder

    def validate(self, sweep: bool = False) -> None:
        if self.transport not in ("digital", "analog", "both"):
            raise ValueError(f"transport must be digital/analog/both, got {self.transport!r}")
        if self.transport == "both" and not sweep:
            raise ValueError("transport 'both' only makes sense for sweeps")
        get_profile(self.profile)
        make_modulation(self.modulation)
        make_fec(self.fec)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if sweep and len(self.snr_list) < 2:
            raise ValueError("an SNR sweep needs at least 2 points")
        for name in self.profiles:
            get_profile(name)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["image"] = str(self.image)
        d["out_dir"] = str(self.out_dir)
        d["snr_list"] = list(self.snr_list)
        d["profiles"] = list(self.profiles)
        if math.isinf(self.snr_db):
            d["snr_db"] = "inf"
        return d


@dataclass
class TrialResult:
    report: TransmissionReport
    sent: SemanticPayload
    received: SemanticPayload | None
    restored: RgbImage | None
    stream: Bitstream


def _analog_budget(payload: SemanticPayload) -> int:
    values = payload.color.cells.size + payload.texture.cells.size
    return math.ceil(values / 2)


def run_trial(image: RgbImage, profile: ExtractionProfile, quant: QuantizationSpec,
              transport: str, modulation: str, fec: str, snr_db: float, seed: int,
              backend: RestorerBackend | None, image_path: Path | None = None,
              analog_budget: int | None = None) -> TrialResult:
    """One end-to-end transmission; the single source of truth for metrics."""
    sent = decompose(image, profile, image_path)
    stream = encode_payload(sent, quant)
    rate = codec.bpp(stream, sent.color.source_size)
    cfg = ChannelConfig(snr_db, seed)

    if transport == "digital":
        result = transmit_digital(stream, make_modulation(modulation), make_fec(fec), cfg)
        usage = result.usage
        received = None if result.failed else decode_payload(result.stream)
        bit_rate = (result.channel_bit_errors / usage.coded_bits
                    if usage.coded_bits else 0.0)
        sym_rate = (result.channel_symbol_errors / usage.symbols
                    if usage.symbols else 0.0)
        failed = result.failed
        scheme_name, fec_name = modulation, fec
    elif transport == "analog":
        budget = analog_budget if analog_budget is not None else _analog_budget(sent)
        result = transmit_analog(sent, cfg, budget)
        usage = result.usage
        received = result.payload
        bit_rate = sym_rate = 0.0  # bit accounting is a digital-path notion
        failed = False
        scheme_name, fec_name = "analog", "none"
    else:
        raise ValueError(f"unknown transport {transport!r}")

    restored = None
    psnr_db = None
    if received is not None and backend is not None \
            and not isinstance(backend, FeatureOnlyBackend):
        request = RestorationRequest.from_payload(received, seed)
        restored = restore(request, backend)
        psnr_db = psnr(image, restored)

    if received is not None:
        color_err = mse(sent.color.cells, received.color.cells)
        texture_err = mse(sent.texture.cells, received.texture.cells)
    else:
        color_err = texture_err = math.nan

    report = TransmissionReport(
        bpp=rate,
        symbols_used=usage.symbols,
        ber=bit_rate,
        ser=sym_rate,
        color_mse=color_err,
        texture_mse=texture_err,
        image_psnr_db=psnr_db,
        integrity_failed=failed,
        seed=seed,
        snr_db=snr_db,
        scheme=scheme_name,
        fec=fec_name,
        transport=transport,
    )
    return TrialResult(report=report, sent=sent, received=received,
                       restored=restored, stream=stream)


def cmd_transmit(cfg: RunConfig) -> tuple[TransmissionReport, dict[str, Path]]:
    """Full pipeline once; writes artifacts and the reproducibility record."""
    cfg.validate()
    image = read_rgb_png(cfg.image)
    profile, quant = get_profile(cfg.profile)
    backend = make_backend(cfg.backend, cfg.endpoint, cfg.luminance_gain)
    trial = run_trial(image, profile, quant, cfg.transport, cfg.modulation,
                      cfg.fec, cfg.snr_db, cfg.seed, backend, cfg.image)

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    trial.stream.save(out / "payload.bits")
    paths["payload_bits"] = out / "payload.bits"
    if trial.received is not None:
        write_png(RgbImage(trial.received.color.cells), out / "received_color.png")
        write_png(GrayImage(trial.received.texture.cells), out / "received_texture.png")
        paths["received_color"] = out / "received_color.png"
        paths["received_texture"] = out / "received_texture.png"
    if trial.restored is not None:
        write_png(trial.restored, out / "restored.png")
        paths["restored"] = out / "restored.png"

    record = {"config": cfg.to_dict(), "report": trial.report.to_dict()}
    report_path = out / "run.json"
    report_path.write_text(json.dumps(record, sort_keys=True, separators=(",", ":"))
                           + "\n", encoding="utf-8")
    paths["report"] = report_path
    return trial.report, paths


_SNR_COLUMNS = (
    "schema_version", "label", "transport", "modulation", "fec", "snr_db",
    "trial", "seed", "bpp", "symbols_used", "ber", "ser", "color_mse",
    "texture_mse", "image_psnr_db", "integrity_failed", "fairness_ok",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def _systems_for(cfg: RunConfig) -> list[str]:
    return ["digital", "analog"] if cfg.transport == "both" else [cfg.transport]


def sweep_snr(cfg: RunConfig) -> list[dict]:
    """Grid of (system, snr, trial) runs with fairness-checked symbol usage."""
    cfg.validate(sweep=True)
    image = read_rgb_png(cfg.image)
    profile, quant = get_profile(cfg.profile)
    backend = make_backend(cfg.backend, cfg.endpoint, cfg.luminance_gain)
    systems = _systems_for(cfg)
    compared = len(systems) > 1

    usage_grid: dict[tuple[int, int, str], int] = {}
    rows: list[dict] = []
    for sys_name in systems:
        label = (f"digital-{cfg.modulation}-{cfg.fec}"
                 if sys_name == "digital" else "analog")
        for snr_idx, snr_db in enumerate(cfg.snr_list):
            trial_reports = []
            for trial_idx in range(cfg.trials):
                seed = derive_seed(cfg.seed, snr_idx, trial_idx)
                budget = usage_grid.get((snr_idx, trial_idx, "digital"))
                try:
                    trial = run_trial(image, profile, quant, sys_name,
                                      cfg.modulation, cfg.fec, snr_db, seed,
                                      backend, cfg.image, analog_budget=budget)
                except ValueError as exc:
                    if compared and sys_name == "analog":
                        raise FairnessError(
                            f"analog path cannot fit the digital symbol grant: {exc}"
                        ) from exc
                    raise
                usage_grid[(snr_idx, trial_idx, sys_name)] = trial.report.symbols_used
                trial_reports.append(trial.report)
                rows.append(_snr_row(label, sys_name, cfg, snr_db, trial_idx, trial.report,
                                     fairness=None))
            rows.extend(_aggregate_rows(label, sys_name, cfg, snr_db, trial_reports,
                                        compared))

    if compared:
        for snr_idx in range(len(cfg.snr_list)):
            for trial_idx in range(cfg.trials):
                a = usage_grid.get((snr_idx, trial_idx, "digital"))
                b = usage_grid.get((snr_idx, trial_idx, "analog"))
                if a != b:
                    raise FairnessError(
                        f"unequal channel usage at snr index {snr_idx}, trial "
                        f"{trial_idx}: digital {a} vs analog {b} symbols")
    return rows


def _snr_row(label, transport, cfg: RunConfig, snr_db, trial, rep: TransmissionReport,
             fairness) -> dict:
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "label": label,
        "transport": transport,
        "modulation": cfg.modulation if transport == "digital" else "",
        "fec": cfg.fec if transport == "digital" else "",
        "snr_db": snr_db,
        "trial": trial,
        "seed": rep.seed,
        "bpp": rep.bpp,
        "symbols_used": rep.symbols_used,
        "ber": rep.ber,
        "ser": rep.ser,
        "color_mse": rep.color_mse,
        "texture_mse": rep.texture_mse,
        "image_psnr_db": rep.image_psnr_db,
        "integrity_failed": rep.integrity_failed,
        "fairness_ok": fairness,
    }


def _aggregate_rows(label, transport, cfg: RunConfig, snr_db,
                    reports: list[TransmissionReport], compared: bool) -> list[dict]:
    def collect(attr):
        vals = [getattr(r, attr) for r in reports]
        vals = [v for v in vals if v is not None and not math.isnan(v)]
        return vals

    out = []
    for stat in ("mean", "std"):
        row = {
            "schema_version": CSV_SCHEMA_VERSION,
            "label": label,
            "transport": transport,
            "modulation": cfg.modulation if transport == "digital" else "",
            "fec": cfg.fec if transport == "digital" else "",
            "snr_db": snr_db,
            "trial": stat,
            "seed": None,
            "fairness_ok": (compared or None) if stat == "mean" else None,
        }
        for attr in ("bpp", "ber", "ser", "color_mse", "texture_mse", "image_psnr_db"):
            vals = collect(attr)
            if not vals:
                row[attr] = None
            else:
                row[attr] = float(np.mean(vals)) if stat == "mean" else float(np.std(vals))
        fails = [1.0 if r.integrity_failed else 0.0 for r in reports]
        row["integrity_failed"] = (float(np.mean(fails)) if stat == "mean"
                                   else float(np.std(fails)))
        row["symbols_used"] = (float(np.mean([r.symbols_used for r in reports]))
                               if stat == "mean"
                               else float(np.std([r.symbols_used for r in reports])))
        out.append(row)
    return out


def write_csv(rows: list[dict], columns: tuple[str, ...], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])
    return path


def cmd_sweep_snr(cfg: RunConfig) -> Path:
    rows = sweep_snr(cfg)
    return write_csv(rows, _SNR_COLUMNS, Path(cfg.out_dir) / "sweep_snr.csv")


_BPP_COLUMNS = (
    "schema_version", "profile", "bpp", "total_bits", "color_mse",
    "texture_mse", "image_psnr_db",
)


def sweep_bpp(cfg: RunConfig) -> list[dict]:
    """Noiseless rate ladder: distortion is pure quantization loss."""
    if len(cfg.profiles) < 2:
        raise ValueError("a rate sweep needs at least 2 profiles")
    image = read_rgb_png(cfg.image)
    backend = make_backend("fallback", luminance_gain=cfg.luminance_gain)
    rows = []
    for name in cfg.profiles:
        profile, quant = get_profile(name)
        trial = run_trial(image, profile, quant, "digital", "bpsk", "identity",
                          math.inf, cfg.seed, backend, cfg.image)
        rows.append({
            "schema_version": CSV_SCHEMA_VERSION,
            "profile": name,
            "bpp": trial.report.bpp,
            "total_bits": trial.stream.total_bits,
            "color_mse": trial.report.color_mse,
            "texture_mse": trial.report.texture_mse,
            "image_psnr_db": trial.report.image_psnr_db,
        })
    return rows


def cmd_sweep_bpp(cfg: RunConfig) -> Path:
    rows = sweep_bpp(cfg)
    return write_csv(rows, _BPP_COLUMNS, Path(cfg.out_dir) / "sweep_bpp.csv")


def cmd_edit(bits_path: Path, edits: list[EditCommand], out_dir: Path,
             backend_name: str = "fallback", endpoint: str | None = None,
             luminance_gain: float = 1.0, seed: int = 0) -> dict[str, Path]:
    """Decode a stored stream, apply edits, restore before and after."""
    stream = Bitstream.load(bits_path)
    payload = decode_payload(stream)
    backend = make_backend(backend_name, endpoint, luminance_gain)

    edited = payload
    for command in edits:
        edited = edit_payload(edited, command)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    before = restore(RestorationRequest.from_payload(payload, seed), backend)
    after = restore(RestorationRequest.from_payload(edited, seed), backend)
    write_png(before, out / "before.png")
    write_png(after, out / "after.png")
    return {"before": out / "before.png", "after": out / "after.png"}


def inspect_stream(bits_path: Path) -> dict:
    """Header fields and accounting of a stored stream, as a plain dict."""
    stream = Bitstream.load(bits_path)
    header = codec.verify(stream)
    w, h = header.source_size
    return {
        "version": header.version,
        "source_width": w,
        "source_height": h,
        "color_grid": list(header.color_grid),
        "texture_grid": list(header.texture_grid),
        "color_bits": header.color_bits,
        "texture_bits": header.texture_bits,
        "texture_palette": header.texture_palette,
        "text_bytes": header.text_bytes,
        "header_bits": header.header_bits,
        "body_bits": header.body_bits,
        "total_bits": stream.total_bits,
        "bpp": codec.bpp(stream, header.source_size),
    }
