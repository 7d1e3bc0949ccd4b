export const DEFAULT_PARAMS = {
    median_window: 15,
    threshold: 16 / 255,
    period_min: 40,
    period_max: 400,
    gauss_sigma: 2.0,
};
