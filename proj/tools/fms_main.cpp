// Copyright 2026 The fms Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fms: run, fit and analyse third-party ultimatum game sessions.

#include <CLI11.hpp>

#include <cctype>
#include <csignal>
#include <iostream>
#include <random>

#include "fms/cohort.hpp"
#include "fms/commands.hpp"
#include "fms/error.hpp"
#include "fms/http_service.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json load_json(const fs::path& path) {
  try {
    return json::parse(fms::read_text(path));
  } catch (const json::parse_error& e) {
    throw fms::Error(fms::ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::vector<fs::path> paths_from(const json& j, const char* key, const fs::path& base) {
  std::vector<fs::path> out;
  if (!j.contains(key)) return out;
  if (j.at(key).is_string()) {
    out.push_back(resolve(base, j.at(key).get<std::string>()));
  } else {
    for (const auto& p : j.at(key)) out.push_back(resolve(base, p.get<std::string>()));
  }
  return out;
}

fms::HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->request_stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Third-party ultimatum game experiments: sessions, cohorts, model fits and tables."};
  app.require_subcommand(1);

  // serve ---------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the participant session service");
  std::string serve_config, host = "127.0.0.1", store_root;
  int port = 8080;
  std::optional<std::uint64_t> serve_seed;
  std::string in_flight = "reject";
  serve->add_option("--config", serve_config, "Service config (JSON)");
  serve->add_option("--seed", serve_seed, "Seed for session ids (random when absent)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");
  serve->add_option("--store", store_root, "Session directory");
  serve->add_option("--in-flight", in_flight, "Concurrent events on one session: reject|queue")
      ->check(CLI::IsMember({"reject", "queue"}));

  // run-cohort ------------------------------------------------------------
  auto* run = app.add_subcommand("run-cohort", "Play scripted or LLM agents through full sessions");
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> stop_after;
  run->add_option("--config", run_config, "Run config (JSON)")->required();
  run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--output-dir", run_out, "Override the config output_dir");
  run->add_option("--stop-after", stop_after, "Stop each agent after N trials (resume later)");

  // fit -------------------------------------------------------------------
  auto* fit = app.add_subcommand("fit", "Fit the belief model to each trace");
  std::string fit_config, fit_out;
  std::vector<std::string> fit_traces;
  std::optional<std::uint64_t> fit_seed;
  bool skip_unfittable = false;
  fit->add_option("--config", fit_config, "Fit config (JSON)");
  fit->add_option("--seed", fit_seed, "Seed recorded with the fit");
  fit->add_option("--out", fit_out, "Fit output (JSONL)");
  fit->add_flag("--skip-unfittable", skip_unfittable,
                "Exit 0 even when some individual is not identifiable");
  fit->add_option("traces", fit_traces, "Trace files, bundles or directories");

  // analyze ---------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "Scores, rates, entropy, belief curves and correlations");
  std::string an_config, an_out, an_fits, an_tables;
  std::vector<std::string> an_traces;
  std::optional<std::uint64_t> an_seed;
  std::optional<int> bins;
  bool include_incomplete = false;
  analyze->add_option("--config", an_config, "Analysis config (JSON)");
  analyze->add_option("--seed", an_seed, "Accepted for uniformity; analysis is deterministic");
  analyze->add_option("--fits", an_fits, "Fit output from `fms fit`");
  analyze->add_option("--out", an_out, "Report (JSON)");
  analyze->add_option("--tables", an_tables, "Also export tables into this directory");
  analyze->add_option("--bins", bins, "Entropy histogram bins")->check(CLI::PositiveNumber);
  analyze->add_flag("--include-incomplete", include_incomplete, "Keep traces with fewer than 20 trials");
  analyze->add_option("traces", an_traces, "Trace files, bundles or directories");

  // export ----------------------------------------------------------------
  auto* exp = app.add_subcommand("export", "Render an analysis report as delimited tables");
  std::string ex_config, ex_report, ex_out, ex_format = "csv";
  std::optional<std::uint64_t> ex_seed;
  exp->add_option("--config", ex_config, "Export config (JSON)");
  exp->add_option("--seed", ex_seed, "Accepted for uniformity; export is deterministic");
  exp->add_option("--report", ex_report, "Report from `fms analyze`");
  exp->add_option("--out", ex_out, "Output directory");
  exp->add_option("--format", ex_format, "csv|tsv")->check(CLI::IsMember({"csv", "tsv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      fms::ServiceConfig cfg;
      json j = serve_config.empty() ? json::object() : load_json(serve_config);
      const fs::path base = serve_config.empty() ? fs::path{} : fs::path(serve_config).parent_path();
      if (j.contains("store_root")) cfg.store_root = resolve(base, j.at("store_root").get<std::string>());
      if (!store_root.empty()) cfg.store_root = store_root;
      if (j.contains("conditions")) {
        for (const auto& [name, path] : j.at("conditions").items()) {
          std::string key = name;
          for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          cfg.conditions.emplace(key, fms::load_condition_file(resolve(base, path.get<std::string>()),
                                                               fms::ConditionId::parse(name)));
        }
      }
      if (j.contains("profiles")) {
        for (auto& p : fms::load_profiles(resolve(base, j.at("profiles").get<std::string>()))) {
          cfg.profiles.emplace(p.id(), std::move(p));
        }
      }
      if (j.contains("penalty_mode")) cfg.default_penalty = fms::PenaltyMode::parse(j.at("penalty_mode").get<std::string>());
      if (serve->count("--in-flight") == 0 && j.contains("in_flight")) in_flight = j.at("in_flight").get<std::string>();
      cfg.store_options.in_flight = in_flight == "queue" ? fms::InFlightPolicy::Queue : fms::InFlightPolicy::Reject;
      if (serve->count("--host") == 0 && j.contains("host")) host = j.at("host").get<std::string>();
      if (serve->count("--port") == 0 && j.contains("port")) port = j.at("port").get<int>();
      if (!serve_seed && j.contains("seed")) serve_seed = j.at("seed").get<std::uint64_t>();
      if (serve_seed) {
        auto gen = std::make_shared<std::mt19937_64>(*serve_seed);
        cfg.store_options.new_id = [gen] {
          static constexpr char kHex[] = "0123456789abcdef";
          std::string id;
          for (int w = 0; w < 2; ++w) {
            auto v = (*gen)();
            for (int i = 0; i < 16; ++i, v >>= 4) id.push_back(kHex[v & 0xf]);
          }
          return id;
        };
      }
      fms::HttpService service(std::move(cfg));
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int bound = service.start(host, port);
      std::cerr << "serving on http://" << host << ":" << bound << "\n";
      service.wait();
      return 0;
    }

    if (*run) {
      auto cfg = fms::load_run_config(run_config);
      if (run_seed) cfg.seed = *run_seed;
      if (!run_out.empty()) cfg.output_dir = run_out;
      fms::CohortHooks hooks;
      hooks.stop_after_trials = stop_after;
      hooks.log = [](const std::string& m) { std::cerr << m << "\n"; };
      const auto res = fms::run_llm_cohort(cfg, hooks);
      std::cerr << res.traces.size() << " agents (" << res.agents_skipped << " already complete), "
                << res.trials_played << " trials played, " << res.trials_resumed << " resumed, "
                << res.missing << " missing\n";
      return 0;
    }

    if (*fit) {
      fms::commands::FitArgs args;
      if (!fit_config.empty()) {
        const auto j = load_json(fit_config);
        const auto base = fs::path(fit_config).parent_path();
        args.config = fms::commands::fit_config_from_json(j.value("fit", j));
        args.traces = paths_from(j, "traces", base);
        if (j.contains("output")) args.output = resolve(base, j.at("output").get<std::string>());
        args.skip_unfittable = j.value("skip_unfittable", false);
      }
      for (const auto& t : fit_traces) args.traces.emplace_back(t);
      if (!fit_out.empty()) args.output = fit_out;
      args.skip_unfittable = args.skip_unfittable || skip_unfittable;
      if (fit_seed) args.config.seed = *fit_seed;
      if (args.traces.empty()) throw fms::Error(fms::ErrorCode::BadConfig, "no traces given");
      return fms::commands::fit_command(args, std::cerr);
    }

    if (*analyze) {
      fms::commands::AnalyzeArgs args;
      if (!an_config.empty()) {
        const auto j = load_json(an_config);
        const auto base = fs::path(an_config).parent_path();
        args.traces = paths_from(j, "traces", base);
        if (j.contains("fits")) args.fits = resolve(base, j.at("fits").get<std::string>());
        if (j.contains("output")) args.output = resolve(base, j.at("output").get<std::string>());
        if (j.contains("tables")) args.tables_dir = resolve(base, j.at("tables").get<std::string>());
        args.options.bin_count = j.value("bins", args.options.bin_count);
        args.include_incomplete = j.value("include_incomplete", false);
      }
      for (const auto& t : an_traces) args.traces.emplace_back(t);
      if (!an_fits.empty()) args.fits = an_fits;
      if (!an_out.empty()) args.output = an_out;
      if (!an_tables.empty()) args.tables_dir = an_tables;
      if (bins) args.options.bin_count = *bins;
      args.include_incomplete = args.include_incomplete || include_incomplete;
      if (args.traces.empty()) throw fms::Error(fms::ErrorCode::BadConfig, "no traces given");
      return fms::commands::analyze_command(args, std::cerr);
    }

    if (*exp) {
      fms::commands::ExportArgs args;
      if (!ex_config.empty()) {
        const auto j = load_json(ex_config);
        const auto base = fs::path(ex_config).parent_path();
        if (j.contains("report")) args.report = resolve(base, j.at("report").get<std::string>());
        if (j.contains("output")) args.output_dir = resolve(base, j.at("output").get<std::string>());
        if (exp->count("--format") == 0 && j.contains("format")) ex_format = j.at("format").get<std::string>();
      }
      if (!ex_report.empty()) args.report = ex_report;
      if (!ex_out.empty()) args.output_dir = ex_out;
      args.format = ex_format == "tsv" ? fms::analysis::ExportFormat::Tsv : fms::analysis::ExportFormat::Csv;
      return fms::commands::export_command(args, std::cerr);
    }
  } catch (const fms::Error& e) {
    std::cerr << "error: " << fms::to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
