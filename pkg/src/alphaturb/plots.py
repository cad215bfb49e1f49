"""Gnuplot scripts accompanying the CSV outputs (plotting itself is external)."""

from __future__ import annotations


def energy_script(members: int) -> str:
    lines = ["set datafile separator ','", "set key autotitle columnhead",
             "set xlabel 't'", "set ylabel 'energy'", "plot \\"]
    curves = [f"  'energy_member_{j}.csv' using 1:2 with lines title 'member {j}'" for j in range(members)]
    return "\n".join(lines) + "\n" + ", \\\n".join(curves) + "\n"


def erms_script(specs) -> str:
    lines = ["set datafile separator ','", "set logscale xy", "set xlabel 't'",
             "set ylabel 'E_rms'", "set key left top", "plot \\"]
    curves = [f"  'erms.csv' using 1:{i + 2} with lines title '{s.label}'" for i, s in enumerate(specs)]
    return "\n".join(lines) + "\n" + ", \\\n".join(curves) + "\n"


def filters_script(cfg) -> str:
    return "\n".join([
        "set datafile separator ','",
        "set xlabel '|k|'",
        "set ylabel 'symbol'",
        "set logscale x",
        "set yrange [0:1.05]",
        "# one curve per (family, N, alpha0) block of filters.csv",
        "plot for [f in 'raw rescaled'] 'filters.csv' using 5:(stringcolumn(1) eq f ? $6 : 1/0) "
        "with points pointsize 0.4 title f",
        "",
    ])
