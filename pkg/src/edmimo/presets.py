"""Built-in scenarios, one per figure of the evaluation.

Each preset is stored as scenario-file text, so ``dump-preset`` output is
exactly what ``run --preset`` executes and can be edited and re-run with
``--config``. Grids are fixed here; trial counts are sized for a desk run
and can be raised with ``--trials``.
"""

PRESETS = {
    "fig2_pdf_compare": """\
# conditional pdf of z: exact chi-square vs Gaussian approximation
[scenario]
name = fig2_pdf_compare
kind = pdf
seed = 2

[constellation]
family = pam
p = 4

[channel]
model = rayleigh
sigma_h2 = 1.0

[sweep]
antennas = 8, 200
snr_db = 3
grid_points = 400

[output]
format = csv
""",
    "fig3_ook_vs_M": """\
# OOK: SER versus the number of antennas, one curve per SNR
[scenario]
name = fig3_ook_vs_M
kind = sweep
seed = 3
trials = 200000
regime = slow

[constellation]
family = ook

[channel]
model = rayleigh
sigma_h2 = 1.0

[detector]
detectors = coherent, ied, aed_gaussian, aed_bayesian
overlays = true

[sweep]
axis = M
points = 8, 16, 32, 64, 100
snr_db = -9, -6, -3, 0

[output]
format = csv
""",
    "fig4_4pam_floor_compare": """\
# conventional 4-PAM, M = 100: exact A-ED SER vs Gaussian and Chernoff forms
[scenario]
name = fig4_4pam_floor_compare
kind = sweep
seed = 4
trials = 200000

[constellation]
family = pam
p = 4

[channel]
model = rayleigh
sigma_h2 = 1.0

[detector]
detectors = aed_gaussian, aed_bayesian
overlays = true

[sweep]
axis = snr_db
points = 0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40
antennas = 100

[output]
format = csv
""",
    "fig5_4pam_vs_snr": """\
# conventional 4-PAM: SER versus SNR for several array sizes
[scenario]
name = fig5_4pam_vs_snr
kind = sweep
seed = 5
trials = 200000

[constellation]
family = pam
p = 4

[channel]
model = rayleigh
sigma_h2 = 1.0

[detector]
detectors = aed_gaussian, ied
overlays = true

[sweep]
axis = snr_db
points = 0, 3, 6, 9, 12, 15, 18, 21, 24, 27, 30
antennas = 16, 32, 64, 100

[output]
format = csv
""",
    "fig6_constellation_opt": """\
# 4-level energy constellations optimised for I-ED and A-ED, M = 100
[scenario]
name = fig6_constellation_opt
kind = optimize
seed = 6

[constellation]
family = opt_ied, opt_aed
p = 4
restarts = 5
opt_seed = 0

[channel]
model = rayleigh
sigma_h2 = 1.0

[sweep]
axis = snr_db
points = 0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30
antennas = 100

[output]
format = csv
""",
    "fig7_ser_opt_vs_M": """\
# A-ED with constellations optimised per point vs conventional 4-PAM
[scenario]
name = fig7_ser_opt_vs_M
kind = sweep
seed = 7
trials = 200000

[constellation]
family = pam, opt_aed
p = 4
restarts = 3

[channel]
model = rayleigh
sigma_h2 = 1.0

[detector]
detectors = aed_gaussian
overlays = true

[sweep]
axis = M
points = 16, 32, 64, 100, 128
snr_db = 5, 10

[output]
format = csv
""",
    "fig8_sparse_los_opt": """\
# sparse LOS channel, L = 9, Rician 9 dB, equal-power scattered paths, 4 dB
[scenario]
name = fig8_sparse_los_opt
kind = sweep
seed = 8
trials = 200000

[constellation]
family = pam, opt_ied, opt_aed
p = 4
restarts = 3

[channel]
model = sparse
paths = 9
los = true
rician_db = 9
profile = equal
los_cos = 0

[detector]
detectors = ied, aed_gaussian
overlays = false

[sweep]
axis = M
points = 8, 16, 32, 64, 100
snr_db = 4

[output]
format = csv
""",
    "fig9_sparse_nlos_aed": """\
# sparse NLOS channels, conventional 4-PAM, A-ED with Bayesian thresholds, 10 dB
[scenario]
name = fig9_sparse_nlos_aed
kind = sweep
seed = 9
trials = 200000

[constellation]
family = pam
p = 4

[channel]
model = sparse
paths = 9, 16, 32, M
los = false
profile = equal, exponential
decay_rate = 0.2

[detector]
detectors = aed_bayesian
overlays = false

[sweep]
axis = M
points = 8, 16, 32, 48, 64, 80, 100
snr_db = 10

[output]
format = csv
""",
    "fig10_sparse_nlos_ied": """\
# sparse NLOS channels, conventional 4-PAM, I-ED, 10 dB
[scenario]
name = fig10_sparse_nlos_ied
kind = sweep
seed = 10
trials = 200000

[constellation]
family = pam
p = 4

[channel]
model = sparse
paths = 9, 16, 32, M
los = false
profile = equal, exponential
decay_rate = 0.2

[detector]
detectors = ied
overlays = false

[sweep]
axis = M
points = 8, 16, 32, 48, 64, 80, 100
snr_db = 10

[output]
format = csv
""",
}


def names():
    return list(PRESETS)


def preset_text(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
