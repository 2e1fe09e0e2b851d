"""Запись результатов исследования: CSV и график в логарифмическом масштабе."""

import csv
from pathlib import Path
from typing import List, Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from utils.errors import StudyError  # noqa: E402
from utils.logger import AppLogger  # noqa: E402

logger = AppLogger("study.export")

RECORD_COLUMNS = ["b", "grid_side", "dof", "error", "iters", "seconds"]
FIT_COLUMNS = ["b", "alpha", "C", "ssr"]
RECORDS_FILE = "records.csv"
FITS_FILE = "fits.csv"
PLOT_FILE = "convergence.png"


def _number(value) -> str:
    # repr дает кратчайшее точное представление float
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def emit(records: Sequence, fits: Sequence, out_dir, plot: bool = False,
         include_timing: bool = True) -> List[Path]:
    """
    Запись records.csv, fits.csv (если есть подгонки) и convergence.png.

    Args:
        records: Записи исследования (непустой список)
        fits: Результаты fit_rate
        out_dir: Директория вывода
        plot (bool): Строить график ошибки от N^{1/2}
        include_timing (bool): Писать время расчета; False дает побайтно
            воспроизводимый файл (столбец seconds заполняется нулями)

    Returns:
        list[Path]: Созданные файлы
    """
    if not records:
        raise StudyError("nothing to emit: empty record list")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    records_path = out / RECORDS_FILE
    with records_path.open("w", newline="", encoding="ascii") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for record in records:
            seconds = record.seconds if include_timing else 0.0
            writer.writerow([_number(record.b), record.grid_side, record.dof,
                             _number(record.error), record.iters, _number(seconds)])
    written.append(records_path)

    if fits:
        fits_path = out / FITS_FILE
        with fits_path.open("w", newline="", encoding="ascii") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(FIT_COLUMNS)
            for fit in fits:
                writer.writerow([_number(fit.b), _number(fit.alpha), _number(fit.C), _number(fit.ssr)])
        written.append(fits_path)

    if plot:
        written.append(plot_convergence(records, out / PLOT_FILE))

    logger.info(f"Wrote {', '.join(p.name for p in written)} to {out}")
    return written


def read_records(path) -> List[dict]:
    """Чтение records.csv обратно в список словарей с числовыми полями."""
    with Path(path).open(newline="", encoding="ascii") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != RECORD_COLUMNS:
            raise StudyError(f"{path}: unexpected header {reader.fieldnames}")
        return [{
            "b": float(row["b"]),
            "grid_side": int(row["grid_side"]),
            "dof": int(row["dof"]),
            "error": float(row["error"]),
            "iters": int(row["iters"]),
            "seconds": float(row["seconds"]),
        } for row in reader]


def plot_convergence(records: Sequence, path) -> Path:
    """График ‖e‖ от N^{1/2} в логарифмическом масштабе по каждому b."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for b in sorted({r.b for r in records}):
        rows = sorted((r for r in records if r.b == b and r.error > 0), key=lambda r: r.grid_side)
        if not rows:
            continue
        ax.loglog([r.grid_side for r in rows], [r.error for r in rows], "o-", label=f"b={b:g}")

    sides = np.array(sorted({r.grid_side for r in records}), dtype=float)
    positive = [r.error for r in records if r.error > 0]
    if sides.size > 1 and positive:
        reference = max(positive) * sides[0] / sides
        ax.loglog(sides, reference, "k--", lw=1, label="slope -1")

    ax.set_xlabel(r"$N^{1/2}$")
    ax.set_ylabel(r"$\|e\|_{1,p(\cdot)}$")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
