#include "pnpunmix/commands.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "pnpunmix/log.hpp"

namespace pnpunmix::cli {

namespace {

// Re-throws module errors with the failing stage prepended, keeping the
// exception type so the exit code still reflects the error class.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ShapeError& e) {
    throw ShapeError(name + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(name + ": " + e.what());
  } catch (const ComputeError& e) {
    throw ComputeError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(name + ": " + e.what());
  }
}

void ensureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

double toNumber(const io::KeyValues& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const std::string& v = it->second;
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + v + "' is not a number");
  }
}

long long toInteger(const io::KeyValues& kv, const std::string& key,
                    long long fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    const long long n = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return n;
  } catch (const std::exception&) {
    throw ParseError("config key '" + key + "': '" + it->second +
                     "' is not an integer");
  }
}

nlohmann::json optionalNumber(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

std::optional<double> readOptional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (j[key].is_string()) {
    const std::string s = j[key].get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ParseError(std::string("metrics record field '") + key +
                     "' holds an unexpected string");
  }
  return j[key].get<double>();
}

}  // namespace

io::KeyValues sceneSpecToKeyValues(const SceneSpec& spec) {
  io::KeyValues kv;
  kv["rows"] = std::to_string(spec.rows);
  kv["cols"] = std::to_string(spec.cols);
  kv["endmembers"] = std::to_string(spec.endmembers);
  kv["bands"] = std::to_string(spec.bands);
  kv["smoothness"] = io::formatDouble(spec.fieldSmoothness);
  kv["contrast"] = io::formatDouble(spec.fieldContrast);
  kv["pure-fraction"] = io::formatDouble(spec.purePixelFraction);
  kv["snr"] = io::formatDouble(spec.snrDb);
  kv["seed"] = std::to_string(spec.seed);
  return kv;
}

SceneSpec sceneSpecFromKeyValues(const io::KeyValues& kv) {
  SceneSpec spec;
  spec.rows = toInteger(kv, "rows", spec.rows);
  spec.cols = toInteger(kv, "cols", spec.cols);
  spec.endmembers = toInteger(kv, "endmembers", spec.endmembers);
  spec.bands = toInteger(kv, "bands", spec.bands);
  spec.fieldSmoothness = toNumber(kv, "smoothness", spec.fieldSmoothness);
  spec.fieldContrast = toNumber(kv, "contrast", spec.fieldContrast);
  spec.purePixelFraction = toNumber(kv, "pure-fraction", spec.purePixelFraction);
  spec.snrDb = toNumber(kv, "snr", spec.snrDb);
  spec.seed = static_cast<std::uint64_t>(
      toInteger(kv, "seed", static_cast<long long>(spec.seed)));
  return spec;
}

SynthOutputs cmdSynth(const SceneSpec& spec, const fs::path& outDir) {
  stage("synth: validate spec", [&] { spec.validate(); });
  const Scene scene = stage("synth: generate scene", [&] { return makeScene(spec); });
  SynthOutputs out{outDir / "noisy.hdr", outDir / "clean.hdr", outDir / "truth.hdr",
                   outDir / "endmembers.csv", outDir / "scene.cfg"};
  stage("synth: write outputs", [&] {
    ensureDirectory(outDir);
    io::writeCube(out.noisy, scene.noisy);
    io::writeCube(out.clean, scene.clean);
    io::writeAbundances(out.truth, scene.truth);
    io::writeEndmembersCsv(out.endmembers, scene.endmembers);
    io::writeKeyValues(out.spec, sceneSpecToKeyValues(spec),
                       "pnpunmix synth scene spec");
  });
  return out;
}

MetricsReport evaluate(const EndmemberMatrix& endmembers,
                       const AbundanceMatrix& estimate, const PixelMatrix& y,
                       const AbundanceMatrix* truth,
                       const PixelMatrix* cleanReference) {
  MetricsReport report;
  const PixelMatrix yhat = reconstruct(endmembers, estimate);
  report.re = reconstructionError(y, yhat);
  std::optional<PixelMatrix> reference;
  if (truth != nullptr) {
    report.rmse = rmse(*truth, estimate);
    reference = reconstruct(endmembers, *truth);
  } else if (cleanReference != nullptr) {
    reference = *cleanReference;
  }
  if (reference) {
    const PsnrResult p = psnrDetailed(yhat, *reference);
    report.psnr = p.psnr;
    report.mse = p.mse;
    report.peak = p.peak;
  }
  return report;
}

std::string metricsRecord(const MetricsReport& report, const std::string& label) {
  nlohmann::json j;
  j["method"] = label;
  j["rmse"] = optionalNumber(report.rmse);
  j["psnr"] = optionalNumber(report.psnr);
  j["mse"] = optionalNumber(report.mse);
  j["peak"] = optionalNumber(report.peak);
  j["re"] = report.re;
  if (!report.perIterationRmse.empty()) j["rmse_trace"] = report.perIterationRmse;
  return j.dump(2);
}

MetricsReport parseMetricsRecord(const std::string& text, std::string* label) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics record: ") + e.what());
  }
  MetricsReport report;
  report.rmse = readOptional(j, "rmse");
  report.psnr = readOptional(j, "psnr");
  report.mse = readOptional(j, "mse");
  report.peak = readOptional(j, "peak");
  if (!j.contains("re") || !j["re"].is_number()) {
    throw ParseError("metrics record: missing 're'");
  }
  report.re = j["re"].get<double>();
  if (j.contains("rmse_trace")) {
    report.perIterationRmse = j["rmse_trace"].get<std::vector<double>>();
  }
  if (label != nullptr) *label = j.value("method", std::string());
  return report;
}

void writeTrace(const fs::path& path, const std::vector<IterationRecord>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "iter,rho,sigma,primal_residual,dual_residual,rmse,min_entry,"
         "max_sum_deviation,qp_flagged,a_step_s,z_step_s\n";
  for (const IterationRecord& r : trace) {
    out << r.iteration << ',' << io::formatDouble(r.rho) << ','
        << io::formatDouble(r.sigma) << ',' << io::formatDouble(r.primalResidual)
        << ',' << io::formatDouble(r.dualResidual) << ','
        << (std::isnan(r.rmse) ? std::string() : io::formatDouble(r.rmse)) << ','
        << io::formatDouble(r.minEntry) << ','
        << io::formatDouble(r.maxSumDeviation) << ',' << r.flaggedPixels << ','
        << io::formatDouble(r.aStepSeconds) << ','
        << io::formatDouble(r.zStepSeconds) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

UnmixOutputs cmdUnmix(const UnmixRequest& request, const DenoiserRegistry& registry) {
  // Every input is loaded and checked before any compute starts.
  const HsiCube cube = stage("unmix: read cube", [&] { return io::readCube(request.cube); });
  const EndmemberMatrix endmembers = stage("unmix: read endmembers", [&] {
    return io::readEndmembersCsv(request.endmembers);
  });
  std::optional<AbundanceMatrix> truth;
  if (request.truth) {
    truth = stage("unmix: read truth", [&] { return io::readAbundances(*request.truth); });
  }
  std::optional<PixelMatrix> clean;
  if (request.clean) {
    clean = stage("unmix: read clean cube", [&] { return unfold(io::readCube(*request.clean)); });
  }
  const PixelMatrix y = unfold(cube);
  stage("unmix: check inputs", [&] {
    request.config.validate();
    if (y.channels() != endmembers.bands()) {
      throw ShapeError("cube has " + std::to_string(y.channels()) +
                       " bands, endmember CSV has " +
                       std::to_string(endmembers.bands()));
    }
    if (truth && (truth->endmembers() != endmembers.endmembers() ||
                  truth->spatialRows != y.spatialRows ||
                  truth->spatialCols != y.spatialCols)) {
      throw ShapeError("truth is " + truth->shapeString() + ", expected " +
                       std::to_string(endmembers.endmembers()) + "x" +
                       std::to_string(y.spatialRows) + "x" +
                       std::to_string(y.spatialCols));
    }
    if (clean && !clean->sameShape(y)) {
      throw ShapeError("clean cube is " + clean->shapeString() + ", observed is " +
                       y.shapeString());
    }
  });

  const std::string denoiserName = request.denoiserName.empty()
                                       ? toString(request.config.denoiser.kind)
                                       : request.denoiserName;
  const Denoiser denoiser = stage("unmix: select denoiser", [&] {
    return registry.create(denoiserName, request.config.denoiser);
  });

  UnmixOutputs out;
  UnmixOptions options;
  options.truth = truth ? &*truth : nullptr;
  out.result = stage("unmix: admm", [&] {
    return unmix(y, endmembers, request.config, denoiser, options);
  });
  out.metrics = stage("unmix: metrics", [&] {
    return evaluate(endmembers, out.result.abundances, y, options.truth,
                    clean ? &*clean : nullptr);
  });
  if (truth) {
    for (const IterationRecord& r : out.result.state.trace) {
      out.metrics.perIterationRmse.push_back(r.rmse);
    }
  }

  stage("unmix: write outputs", [&] {
    ensureDirectory(request.outDir);
    out.abundances = request.outDir / "abundances.hdr";
    io::writeAbundances(out.abundances, out.result.abundances);
    out.reconstruction = request.outDir / "reconstruction.hdr";
    io::writeCube(out.reconstruction,
                  fold(reconstruct(endmembers, out.result.abundances)));
    if (request.emitMetrics) {
      out.metricsFile = request.outDir / "metrics.json";
      std::ofstream metrics(out.metricsFile, std::ios::trunc);
      metrics << metricsRecord(out.metrics, request.label) << '\n';
      if (!metrics) throw IoError("failed writing " + out.metricsFile.string());
    }
    if (request.emitTrace) {
      out.traceFile = request.outDir / "trace.csv";
      writeTrace(out.traceFile, out.result.state.trace);
    }
    if (request.emitMaps) {
      const HsiCube maps = fold(static_cast<const PixelMatrix&>(out.result.abundances));
      for (Index j = 0; j < maps.bands(); ++j) {
        const fs::path path =
            request.outDir / ("map_" + std::to_string(j) + "_" + endmembers.names()[j] + ".pgm");
        io::writeGraymap(path, Eigen::MatrixXd(maps.band(j)));
        out.maps.push_back(path);
      }
    }
  });
  if (out.result.flaggedPixels > 0) {
    log::warn(std::to_string(out.result.flaggedPixels) +
              " pixel QPs hit the iteration limit; best feasible iterates kept");
  }
  return out;
}

MetricsReport cmdEval(const EvalRequest& request) {
  const AbundanceMatrix estimate =
      stage("eval: read estimate", [&] { return io::readAbundances(request.estimate); });
  const EndmemberMatrix endmembers = stage("eval: read endmembers", [&] {
    return io::readEndmembersCsv(request.endmembers);
  });
  const PixelMatrix y = stage("eval: read cube", [&] { return unfold(io::readCube(request.cube)); });
  std::optional<AbundanceMatrix> truth;
  if (request.truth) {
    truth = stage("eval: read truth", [&] { return io::readAbundances(*request.truth); });
  }
  std::optional<PixelMatrix> clean;
  if (request.clean) {
    clean = stage("eval: read clean cube", [&] { return unfold(io::readCube(*request.clean)); });
  }
  const MetricsReport report = stage("eval: metrics", [&] {
    if (estimate.endmembers() != endmembers.endmembers() ||
        estimate.spatialRows != y.spatialRows || estimate.spatialCols != y.spatialCols) {
      throw ShapeError("estimate is " + estimate.shapeString() + ", cube is " +
                       y.shapeString() + " with " +
                       std::to_string(endmembers.endmembers()) + " endmembers");
    }
    return evaluate(endmembers, estimate, y, truth ? &*truth : nullptr,
                    clean ? &*clean : nullptr);
  });
  const std::string record = metricsRecord(report, request.label);
  if (request.output) {
    std::ofstream out(*request.output, std::ios::trunc);
    out << record << '\n';
    if (!out) throw IoError("failed writing " + request.output->string());
  } else {
    std::cout << record << '\n';
  }
  return report;
}

void cmdDenoise(const DenoiseRequest& request, const DenoiserRegistry& registry) {
  const HsiCube input = stage("denoise: read cube", [&] { return io::readCube(request.input); });
  const Denoiser denoiser = stage("denoise: select denoiser", [&] {
    return registry.create(request.denoiserName, request.spec);
  });
  const HsiCube output = stage("denoise: apply", [&] { return denoiser(input, request.sigma); });
  stage("denoise: write cube", [&] { io::writeCube(request.output, output); });
}

}  // namespace pnpunmix::cli
