#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>

#include "fairauction/auction_model.hpp"

namespace fairauction {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCheckpointMagic = "fairauction-v1";

// Text format:
//   fairauction-v1 <bidder_type> <n> <m> <layers> <width>
//   block <name> <rows> <cols>
//   <cols floats>            (rows lines, 17 significant digits)
//   ...
void write_model(const AuctionModel& model, std::ostream& out);
AuctionModel read_model(std::istream& in, std::optional<BidderType> expected = std::nullopt);

void save_model(const AuctionModel& model, const std::filesystem::path& path);
AuctionModel load_model(const std::filesystem::path& path, std::optional<BidderType> expected = std::nullopt);

// Locale-independent decimal conversion shared by every text artifact.
std::string format_double(double value, int significant = 17);
double parse_double(std::string_view text);

}  // namespace fairauction
