#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace {
extern "C" void on_sigint(int) { nlos::cli::interrupt_flag() = true; }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  const std::vector<std::string> args(argv, argv + argc);
  const nlos::cli::Context ctx{std::cout, std::cerr, [] { return nlos::cli::interrupt_flag().load(); }};
  return nlos::cli::run(args, ctx);
}
