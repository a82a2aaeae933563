#include "fairauction/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace fairauction {

std::string format_double(double value, int significant) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return value;
}

void write_model(const AuctionModel& model, std::ostream& out) {
  const Topology& t = model.topology();
  out << kCheckpointMagic << ' ' << to_string(t.bidder_type) << ' ' << t.agents << ' ' << t.items << ' '
      << t.hidden_layers << ' ' << t.hidden_width << '\n';
  for (const Parameter& p : model.parameters()) {
    const std::size_t rows = p.value.rank() == 2 ? p.value.dim(0) : 1;
    const std::size_t cols = p.value.rank() == 2 ? p.value.dim(1) : p.value.dim(0);
    out << "block " << p.name << ' ' << rows << ' ' << cols << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) out << ' ';
        out << format_double(p.value[r * cols + c]);
      }
      out << '\n';
    }
  }
}

AuctionModel read_model(std::istream& in, std::optional<BidderType> expected) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("checkpoint: empty file");
  std::istringstream header(line);
  std::string magic;
  std::string type_text;
  Topology t;
  if (!(header >> magic >> type_text >> t.agents >> t.items >> t.hidden_layers >> t.hidden_width) ||
      magic != kCheckpointMagic) {
    throw CheckpointError("checkpoint: corrupted header '" + line + "'");
  }
  try {
    t.bidder_type = parse_bidder_type(type_text);
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: corrupted header: ") + e.what());
  }
  if (expected && *expected != t.bidder_type) {
    throw CheckpointError("checkpoint: bidder_type mismatch (file " + to_string(t.bidder_type) + ", expected " +
                          to_string(*expected) + ")");
  }

  AuctionModel model = AuctionModel::zeros(t);
  for (Parameter& p : model.parameters()) {
    const std::size_t rows = p.value.rank() == 2 ? p.value.dim(0) : 1;
    const std::size_t cols = p.value.rank() == 2 ? p.value.dim(1) : p.value.dim(0);
    if (!std::getline(in, line)) throw CheckpointError("checkpoint: truncated before block " + p.name);
    std::istringstream block(line);
    std::string keyword;
    std::string name;
    std::size_t r = 0;
    std::size_t c = 0;
    if (!(block >> keyword >> name >> r >> c) || keyword != "block" || name != p.name || r != rows || c != cols) {
      throw CheckpointError("checkpoint: bad block header for " + p.name + ": '" + line + "'");
    }
    for (std::size_t row = 0; row < rows; ++row) {
      if (!std::getline(in, line)) throw CheckpointError("checkpoint: truncated block " + p.name);
      std::istringstream values(line);
      std::string token;
      std::size_t col = 0;
      while (values >> token) {
        if (col == cols) throw CheckpointError("checkpoint: too many values in block " + p.name);
        try {
          p.value[row * cols + col] = parse_double(token);
        } catch (const std::invalid_argument&) {
          throw CheckpointError("checkpoint: bad value '" + token + "' in block " + p.name);
        }
        ++col;
      }
      if (col != cols) throw CheckpointError("checkpoint: truncated block " + p.name);
    }
  }
  return model;
}

void save_model(const AuctionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  write_model(model, out);
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

AuctionModel load_model(const std::filesystem::path& path, std::optional<BidderType> expected) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_model(in, expected);
}

}  // namespace fairauction
