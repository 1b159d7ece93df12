#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splatplan/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop active reconstruction planner for synthetic "
               "RGB-D scenes"};
  app.require_subcommand(1);

  std::string config_path, out_dir, variant_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false, dump_images = false;

  CLI::App* run = app.add_subcommand("run", "Execute one experiment");
  run->add_option("--config", config_path, "Run config file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed_override, "Override the config seed")
      ->each([&](const std::string&) { has_seed = true; });
  run->add_option("--variant", variant_override,
                  "Override the config variant (V1..V5)");
  run->add_flag("--dump-images", dump_images, "Write per-cycle RGB-D dumps");

  std::vector<std::string> inputs;
  std::string table_out;
  CLI::App* cmp = app.add_subcommand("compare", "Tabulate prior runs");
  cmp->add_option("--inputs", inputs, "Run output directories")->required();
  cmp->add_option("--out", table_out, "Output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      splatplan::RunConfig cfg = splatplan::RunConfig::load(config_path);
      if (has_seed) cfg.seed = seed_override;
      if (!variant_override.empty())
        cfg.variant = splatplan::parse_variant(variant_override);
      if (dump_images) cfg.dump_images = true;
      const splatplan::RunResult res = splatplan::run_experiment(cfg, out_dir);
      std::cout << res.report.csv_header() << "\n"
                << res.report.csv_row() << "\n";
      return res.exit_code;
    }
    if (cmp->parsed()) {
      const std::string table = splatplan::compare_variants(inputs);
      std::ofstream os(table_out, std::ios::trunc);
      if (!os) throw std::runtime_error("cannot write " + table_out);
      os << table;
      std::cout << table;
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
