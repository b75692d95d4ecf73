#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xvgc/encoder.hpp"

namespace xvgc {

enum class DatasetSource { Synthetic, IuXml };

struct DatasetManifest {
    struct Entry {
        std::string image_path;
        std::string caption;
    };
    std::vector<Entry> entries;  // sorted by image path
    DatasetSource source = DatasetSource::Synthetic;
    std::uint64_t seed = 0;
};

struct SyntheticSample {
    ImageTensor image;  // 32x32x1
    std::string caption;
};

// Renders 1-2 shapes (square, cross, disc) at 3x3-grid-quantized positions
// with two intensity levels. Caption grammar per shape:
// "<intensity> <shape> <row> <col>", shapes joined by "and".
std::vector<SyntheticSample> generate_synthetic_samples(std::size_t count, std::uint64_t seed);

// Renders samples, writes "sample_NNNN.pgm" files plus "manifest.tsv" under
// out_dir, and returns the manifest.
DatasetManifest generate_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                           const std::filesystem::path& out_dir);

// Scans a directory of IU-style XML reports: the findings section becomes
// the caption, paired with each referenced image id. Files without findings
// are skipped with a warning on stderr.
DatasetManifest parse_iu_reports(const std::filesystem::path& xml_directory,
                                 const std::filesystem::path& image_dir = {},
                                 const std::string& image_ext = ".png");

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace xvgc
