#include "xvgc/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace xvgc {

namespace {

// Skips whitespace and '#' comment lines between header fields.
std::size_t next_header_value(std::istream& in, const std::string& what) {
    for (;;) {
        int c = in.peek();
        if (c == EOF) throw FormatError("unexpected end of file reading " + what);
        if (std::isspace(c)) {
            in.get();
        } else if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else {
            break;
        }
    }
    std::size_t value = 0;
    if (!(in >> value)) throw FormatError("bad header value for " + what);
    return value;
}

}  // namespace

ImageTensor read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image file: " + path.string());

    std::string magic;
    in >> magic;
    std::size_t channels;
    bool binary;
    if (magic == "P2") {
        channels = 1;
        binary = false;
    } else if (magic == "P5") {
        channels = 1;
        binary = true;
    } else if (magic == "P3") {
        channels = 3;
        binary = false;
    } else if (magic == "P6") {
        channels = 3;
        binary = true;
    } else {
        throw FormatError("unsupported magic number \"" + magic +
                          "\" in " + path.string() + "; expected PGM (P2/P5) or PPM (P3/P6)");
    }

    const std::size_t width = next_header_value(in, "width");
    const std::size_t height = next_header_value(in, "height");
    const std::size_t maxval = next_header_value(in, "maxval");
    if (width == 0 || height == 0) throw FormatError("zero image dimension in " + path.string());
    if (maxval == 0 || maxval > 65535) throw FormatError("bad maxval in " + path.string());

    ImageTensor img;
    img.width = width;
    img.height = height;
    img.channels = channels;
    img.pixels.resize(width * height * channels);

    const std::size_t count = img.pixels.size();
    if (binary) {
        in.get();  // single whitespace after maxval
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(count * bytes_per);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw FormatError("truncated pixel data in " + path.string());
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t v = bytes_per == 2
                                ? (static_cast<std::size_t>(raw[2 * i]) << 8) | raw[2 * i + 1]
                                : raw[i];
            img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v = 0;
            if (!(in >> v)) throw FormatError("truncated pixel data in " + path.string());
            if (v < 0 || static_cast<std::size_t>(v) > maxval)
                throw FormatError("pixel value out of range in " + path.string());
            img.pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return img;
}

void write_pgm(const std::filesystem::path& path, const ImageTensor& image) {
    const ImageTensor& gray = image.channels == 1 ? image : to_grayscale(image);
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write image file: " + path.string());
    out << "P2\n" << gray.width << " " << gray.height << "\n255\n";
    for (std::size_t y = 0; y < gray.height; ++y) {
        for (std::size_t x = 0; x < gray.width; ++x) {
            const double v = std::clamp(gray.at(y, x), 0.0, 1.0);
            out << static_cast<int>(std::lround(v * 255.0));
            out << (x + 1 == gray.width ? '\n' : ' ');
        }
    }
}

ImageTensor to_grayscale(const ImageTensor& image) {
    if (image.channels == 1) return image;
    ImageTensor out;
    out.width = image.width;
    out.height = image.height;
    out.channels = 1;
    out.pixels.resize(image.width * image.height);
    for (std::size_t y = 0; y < image.height; ++y)
        for (std::size_t x = 0; x < image.width; ++x)
            out.at(y, x) = (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
    return out;
}

ImageTensor crop_resize(const ImageTensor& image, std::size_t size) {
    const std::size_t side = std::min(image.width, image.height);
    const std::size_t x0 = (image.width - side) / 2;
    const std::size_t y0 = (image.height - side) / 2;

    ImageTensor out;
    out.width = size;
    out.height = size;
    out.channels = image.channels;
    out.pixels.resize(size * size * image.channels);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const std::size_t sy = y0 + y * side / size;
            const std::size_t sx = x0 + x * side / size;
            for (std::size_t c = 0; c < image.channels; ++c)
                out.at(y, x, c) = image.at(sy, sx, c);
        }
    return out;
}

ImageTensor load_image(const std::filesystem::path& path, std::size_t size,
                       std::size_t channels) {
    ImageTensor img = read_pnm(path);
    if (channels == 1 && img.channels == 3) img = to_grayscale(img);
    if (channels == 3 && img.channels == 1)
        throw FormatError("grayscale image where 3 channels expected: " + path.string());
    if (img.width != size || img.height != size) img = crop_resize(img, size);
    return img;
}

}  // namespace xvgc
