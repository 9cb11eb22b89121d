#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "convaug/serialize.hpp"

namespace convaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalidConfig = 2;

/// Schema violation in an experiment configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A parsed configuration. Relative paths inside it resolve against `base_dir`.
struct Invocation {
  Json config = Json::object();
  std::filesystem::path base_dir = ".";
};

int cmd_run(const Invocation& inv, std::ostream& log);
int cmd_train(const Invocation& inv, std::ostream& log);
int cmd_mpc(const Invocation& inv, std::ostream& log);
int cmd_reconstruct(const Invocation& inv, std::ostream& log);
int cmd_verify(const Invocation& inv, std::ostream& log);

/// Dispatches by command name and maps errors to exit codes.
int dispatch(const std::string& command, const Invocation& inv, std::ostream& log);

/// Full command-line entry point.
int main(int argc, char** argv);

}  // namespace convaug::cli
