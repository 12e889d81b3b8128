#pragma once

#include <string_view>

namespace pnpunmix::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Silent = 3 };

// Messages below the threshold are dropped. Default: Warn.
void setLevel(Level level);
Level level();

void debug(std::string_view message);
void info(std::string_view message);
void warn(std::string_view message);

}  // namespace pnpunmix::log
