#pragma once

#include <atomic>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace nlos::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNoTarget = 3;
inline constexpr int kExitInterrupted = 130;

struct Context {
  std::ostream& out;
  std::ostream& err;
  /// Polled by long-running commands; true stops them early.
  std::function<bool()> interrupted;
};

/// Process-wide flag set by the SIGINT handler in main().
std::atomic<bool>& interrupt_flag();

/// Full command line including argv[0]. Never throws; returns an exit code.
int run(const std::vector<std::string>& args, const Context& ctx);

}  // namespace nlos::cli
