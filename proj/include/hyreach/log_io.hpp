#pragma once

#include <string>

#include "hyreach/engine.hpp"

namespace hyreach::log_io {

/// Writes the log as newline-delimited JSON: a header object with the full
/// resolved configuration, one object per sample, one per jump, and a final
/// result object. Numeric fields round-trip exactly.
void export_ndjson(const engine::TrajectoryLog& log, const std::string& path);

/// Writes a single CSV with a `type` column ("sample" or "jump"); sample and
/// jump rows share the header, with unused cells empty.
void export_csv(const engine::TrajectoryLog& log, const std::string& path);

void export_log(const engine::TrajectoryLog& log, const std::string& path,
                const std::string& format);

/// Reads an ndjson log back (the inverse of export_ndjson).
engine::TrajectoryLog read_ndjson(const std::string& path);

/// Emits plot-ready columnar files into `outdir`:
///   phase.csv        t, j, x1, x2[, ...]
///   fsa_state.csv    t, s
///   theta_error.csv  t, err
///   weights.csv      t, Wc_i..., Wa_i...
///   roi_circles.csv  name, px, py (sampled outlines for the phase portrait)
void emit_plots(const engine::TrajectoryLog& log, const std::string& outdir);

}  // namespace hyreach::log_io
