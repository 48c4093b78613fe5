#include "noids/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
  using namespace noids;
  CLI::App app{"Minimal-surface contour solver in E(kappa, tau) spaces"};
  app.require_subcommand(1);

  std::string config, out;
  for (const char* name : {"scherk", "knoid", "noid2k", "sister", "verify"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", config, "configuration file")->required();
    sub->add_option("--out", out, "output directory")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const Pipeline pipeline = parse_pipeline(app.get_subcommands().front()->get_name());
    const RunConfig cfg = load_config(config, pipeline);
    const RunResult res = run_pipeline(cfg, out);
    for (const Check& c : res.checks)
      std::cout << (c.pass ? "ok   " : "FAIL ") << c.name << " = " << format_number(c.value) << "\n";
    std::cout << res.files.size() << " files written to " << out << "\n";
    return res.passed() ? kExitOk : kExitCheckFailed;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  }
}
