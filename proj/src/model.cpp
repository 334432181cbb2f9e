#include "date_ad/model.hpp"

namespace date_ad {

GeneratorMode generator_mode_from_string(const std::string& s) {
  if (s == "random") return GeneratorMode::kRandom;
  if (s == "small") return GeneratorMode::kSmall;
  if (s == "large") return GeneratorMode::kLarge;
  throw InvalidArgument("unknown generator mode: '" + s + "' (expected random|small|large)");
}

std::string to_string(GeneratorMode m) {
  switch (m) {
    case GeneratorMode::kRandom: return "random";
    case GeneratorMode::kSmall: return "small";
    case GeneratorMode::kLarge: return "large";
  }
  return "random";
}

}  // namespace date_ad
