#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace traffic {

// Shortest round-trip decimal formatting so reruns are byte-identical.
std::string format_number(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// UTF-8, comma delimiter, '.' decimal, mandatory header row.
void write_csv(const std::string& path, const CsvTable& table);

void write_text(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// FNV-1a 64-bit content hash, hex-encoded.
std::string content_hash(const std::string& text);

}  // namespace traffic
