#include "xvgc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "xvgc/image_io.hpp"
#include "xvgc/params.hpp"
#include "xvgc/tokenizer.hpp"

namespace xvgc {

namespace {

constexpr std::size_t kImageSize = 32;
const char* kRowWords[3] = {"upper", "center", "lower"};
const char* kColWords[3] = {"left", "middle", "right"};
const char* kShapeWords[3] = {"square", "cross", "disc"};
const char* kIntensityWords[2] = {"dim", "bright"};
constexpr double kIntensityLevels[2] = {0.45, 0.95};
constexpr std::size_t kGridCenters[3] = {5, 16, 26};

void render_shape(ImageTensor& img, std::size_t shape, std::size_t row, std::size_t col,
                  double level) {
    const std::ptrdiff_t cy = static_cast<std::ptrdiff_t>(kGridCenters[row]);
    const std::ptrdiff_t cx = static_cast<std::ptrdiff_t>(kGridCenters[col]);
    auto put = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(img.height) ||
            x >= static_cast<std::ptrdiff_t>(img.width))
            return;
        img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = level;
    };
    switch (shape) {
        case 0:  // square, 7x7
            for (std::ptrdiff_t dy = -3; dy <= 3; ++dy)
                for (std::ptrdiff_t dx = -3; dx <= 3; ++dx) put(cy + dy, cx + dx);
            break;
        case 1:  // cross, 9-long arms of width 3
            for (std::ptrdiff_t d = -4; d <= 4; ++d)
                for (std::ptrdiff_t w = -1; w <= 1; ++w) {
                    put(cy + d, cx + w);
                    put(cy + w, cx + d);
                }
            break;
        default:  // disc, radius 4
            for (std::ptrdiff_t dy = -4; dy <= 4; ++dy)
                for (std::ptrdiff_t dx = -4; dx <= 4; ++dx)
                    if (dy * dy + dx * dx <= 16) put(cy + dy, cx + dx);
            break;
    }
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic_samples(std::size_t count, std::uint64_t seed) {
    if (count < 1) throw ConfigError("synthetic dataset needs count >= 1");
    Rng rng(seed);
    std::vector<SyntheticSample> samples;
    samples.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        SyntheticSample sample;
        sample.image.height = kImageSize;
        sample.image.width = kImageSize;
        sample.image.channels = 1;
        sample.image.pixels.assign(kImageSize * kImageSize, 0.0);

        const std::size_t num_shapes = 1 + rng.uniform_index(2);
        std::vector<std::size_t> cells;  // occupied grid cells
        std::vector<std::string> phrases;
        for (std::size_t k = 0; k < num_shapes; ++k) {
            std::size_t cell;
            do {
                cell = rng.uniform_index(9);
            } while (std::find(cells.begin(), cells.end(), cell) != cells.end());
            cells.push_back(cell);
            const std::size_t row = cell / 3, col = cell % 3;
            const std::size_t shape = rng.uniform_index(3);
            const std::size_t intensity = rng.uniform_index(2);
            render_shape(sample.image, shape, row, col, kIntensityLevels[intensity]);
            phrases.push_back(std::string(kIntensityWords[intensity]) + " " + kShapeWords[shape] +
                              " " + kRowWords[row] + " " + kColWords[col]);
        }
        sample.caption = phrases[0];
        for (std::size_t k = 1; k < phrases.size(); ++k) sample.caption += " and " + phrases[k];
        samples.push_back(std::move(sample));
    }
    return samples;
}

DatasetManifest generate_synthetic_dataset(std::size_t count, std::uint64_t seed,
                                           const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto samples = generate_synthetic_samples(count, seed);

    DatasetManifest manifest;
    manifest.source = DatasetSource::Synthetic;
    manifest.seed = seed;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::ostringstream name;
        name << "sample_" << std::setw(4) << std::setfill('0') << i << ".pgm";
        const auto path = out_dir / name.str();
        write_pgm(path, samples[i].image);
        manifest.entries.push_back({path.string(), samples[i].caption});
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const auto& a, const auto& b) { return a.image_path < b.image_path; });
    write_manifest(manifest, out_dir / "manifest.tsv");
    return manifest;
}

namespace {

// Extracts the text between the first <tag ...> and </tag> occurrence.
std::string tag_text(const std::string& xml, const std::string& open_prefix,
                     const std::string& close) {
    const auto start = xml.find(open_prefix);
    if (start == std::string::npos) return {};
    const auto body_start = xml.find('>', start);
    if (body_start == std::string::npos) return {};
    const auto end = xml.find(close, body_start);
    if (end == std::string::npos) return {};
    return xml.substr(body_start + 1, end - body_start - 1);
}

std::string collapse_whitespace(const std::string& text) {
    std::string out;
    bool in_space = true;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

DatasetManifest parse_iu_reports(const std::filesystem::path& xml_directory,
                                 const std::filesystem::path& image_dir,
                                 const std::string& image_ext) {
    if (!std::filesystem::is_directory(xml_directory))
        throw ConfigError("report directory does not exist: " + xml_directory.string());

    DatasetManifest manifest;
    manifest.source = DatasetSource::IuXml;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(xml_directory))
        if (entry.is_regular_file() && entry.path().extension() == ".xml")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) {
            std::cerr << "warning: cannot open " << file << ", skipping\n";
            continue;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string xml = buf.str();

        const std::string findings =
            collapse_whitespace(tag_text(xml, "<AbstractText Label=\"FINDINGS\"", "</AbstractText>"));
        if (findings.empty() || tokenize(findings).empty()) {
            std::cerr << "warning: no findings section in " << file << ", skipping\n";
            continue;
        }

        // Every <parentImage id="..."> references one image file.
        bool any_image = false;
        std::size_t pos = 0;
        while ((pos = xml.find("<parentImage", pos)) != std::string::npos) {
            const auto id_pos = xml.find("id=\"", pos);
            if (id_pos == std::string::npos) break;
            const auto id_end = xml.find('"', id_pos + 4);
            if (id_end == std::string::npos) break;
            const std::string id = xml.substr(id_pos + 4, id_end - id_pos - 4);
            if (!id.empty()) {
                const auto image_path = (image_dir.empty() ? file.parent_path() : image_dir) /
                                        (id + image_ext);
                manifest.entries.push_back({image_path.string(), findings});
                any_image = true;
            }
            pos = id_end;
        }
        if (!any_image)
            std::cerr << "warning: no image references in " << file << ", skipping\n";
    }

    if (manifest.entries.empty())
        throw ConfigError("no usable reports found in " + xml_directory.string());
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const auto& a, const auto& b) { return a.image_path < b.image_path; });
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write manifest: " + path.string());
    for (const auto& e : manifest.entries) out << e.image_path << "\t" << e.caption << "\n";
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read manifest: " + path.string());
    DatasetManifest manifest;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("manifest line " + std::to_string(lineno) + " has no tab separator");
        DatasetManifest::Entry e{line.substr(0, tab), line.substr(tab + 1)};
        if (e.caption.empty())
            throw FormatError("manifest line " + std::to_string(lineno) + " has empty caption");
        manifest.entries.push_back(std::move(e));
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const auto& a, const auto& b) { return a.image_path < b.image_path; });
    return manifest;
}

}  // namespace xvgc
