#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xvgc/checkpoint.hpp"
#include "xvgc/config.hpp"
#include "xvgc/dataset.hpp"
#include "xvgc/decoder.hpp"
#include "xvgc/image_io.hpp"
#include "xvgc/metrics.hpp"
#include "xvgc/trainer.hpp"

namespace fs = std::filesystem;
using namespace xvgc;

namespace {

std::vector<TrainSample> load_samples(const DatasetManifest& manifest, const EncoderConfig& enc,
                                      const Vocabulary& vocab, std::size_t max_len) {
    std::vector<TrainSample> samples;
    samples.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        ImageTensor img = load_image(e.image_path, enc.image_size, enc.channels);
        TokenSequence seq = encode(tokenize(e.caption), vocab, max_len);
        samples.emplace_back(std::move(img), std::move(seq));
    }
    return samples;
}

int cmd_synth_data(std::size_t count, std::uint64_t seed, const std::string& out_dir) {
    auto manifest = generate_synthetic_dataset(count, seed, out_dir);
    std::cout << "wrote " << manifest.entries.size() << " samples to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, const std::string& loss_log_path) {
    RunConfig cfg = parse_config(config_path);
    DatasetManifest manifest = read_manifest(data_path);

    std::vector<std::string> captions;
    for (const auto& e : manifest.entries) captions.push_back(e.caption);
    Vocabulary vocab = build_vocab(captions);
    cfg.decoder.vocab_size = vocab.size();
    if (cfg.decoder.model_dim != cfg.encoder.model_dim)
        throw ConfigError("encoder and decoder model_dim must match for cross-attention");

    Rng rng(cfg.train.seed);
    ModelParams params;
    register_encoder_params(params, cfg.encoder, rng);
    register_decoder_params(params, cfg.decoder, rng);

    auto samples = load_samples(manifest, cfg.encoder, vocab, cfg.decoder.max_len);
    TrainResult result = train(samples, cfg.encoder, cfg.decoder, cfg.train, params);

    if (!loss_log_path.empty()) {
        std::ofstream log(loss_log_path);
        if (!log) throw ConfigError("cannot write loss log: " + loss_log_path);
        log << loss_log_csv(result);
    }

    Checkpoint ckpt;
    ckpt.encoder = cfg.encoder;
    ckpt.decoder = cfg.decoder;
    ckpt.vocab = vocab;
    ckpt.params = std::move(params);
    save_checkpoint(ckpt, out_path);
    std::cout << "final loss " << result.final_loss << ", checkpoint " << out_path << "\n";
    return 0;
}

int cmd_generate(const std::string& ckpt_path, const std::vector<std::string>& image_paths,
                 const std::string& data_path, const std::string& out_path) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);

    std::vector<std::string> paths = image_paths;
    if (!data_path.empty())
        for (const auto& e : read_manifest(data_path).entries) paths.push_back(e.image_path);
    if (paths.empty()) throw ConfigError("generate: no images given (use --image or --data)");

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw ConfigError("cannot write captions: " + out_path);
        out = &file;
    }
    for (const auto& p : paths) {
        ImageTensor img = load_image(p, ckpt.encoder.image_size, ckpt.encoder.channels);
        TokenSequence seq = generate_greedy(img, ckpt.encoder, ckpt.decoder, ckpt.params);
        *out << p << "\t" << decode(seq, ckpt.vocab) << "\n";
    }
    return 0;
}

std::map<std::string, std::string> read_caption_tsv(const std::string& path) {
    std::map<std::string, std::string> out;
    for (const auto& e : read_manifest(path).entries) out[e.image_path] = e.caption;
    return out;
}

int cmd_evaluate(const std::string& pred_path, const std::string& ref_path,
                 const std::string& out_path) {
    auto preds = read_caption_tsv(pred_path);
    auto refs = read_caption_tsv(ref_path);

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [path, ref] : refs) {
        auto it = preds.find(path);
        if (it == preds.end()) throw ConfigError("no prediction for " + path);
        pairs.emplace_back(it->second, ref);
    }
    MetricReport report = evaluate_corpus(pairs);

    const std::string json = report.to_json();
    if (out_path.empty()) {
        std::cout << json << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot write report: " + out_path);
        out << json << "\n";
    }
    return 0;
}

int cmd_heatmap(const std::string& ckpt_path, const std::string& image_path, std::size_t layer,
                std::size_t head, std::size_t patch, const std::string& out_prefix) {
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    ImageTensor img = load_image(image_path, ckpt.encoder.image_size, ckpt.encoder.channels);

    Tape tape;
    tape.recording = false;
    EncoderOutput enc = encode(tape, img, ckpt.encoder, ckpt.params);
    auto grid = attention_heatmap(enc, layer, head, patch);

    const std::string csv_path = out_prefix + ".csv";
    std::ofstream csv(csv_path);
    if (!csv) throw ConfigError("cannot write heatmap: " + csv_path);
    csv.precision(17);
    for (const auto& row : grid) {
        for (std::size_t j = 0; j < row.size(); ++j) csv << row[j] << (j + 1 == row.size() ? '\n' : ',');
    }
    csv.close();

    // PGM view scaled so the strongest cell maps to 255.
    double peak = 0.0;
    for (const auto& row : grid)
        for (double v : row) peak = std::max(peak, v);
    ImageTensor view;
    view.height = grid.size();
    view.width = grid.size();
    view.channels = 1;
    view.pixels.resize(view.height * view.width);
    for (std::size_t i = 0; i < view.height; ++i)
        for (std::size_t j = 0; j < view.width; ++j)
            view.at(i, j) = peak > 0.0 ? grid[i][j] / peak : 0.0;
    write_pgm(out_prefix + ".pgm", view);

    std::cout << "wrote " << csv_path << " and " << out_prefix << ".pgm\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale ViT encoder + cross-attention GPT-style captioner"};
    app.require_subcommand(1);

    std::size_t count = 32, layer = 0, head = 0, patch = 0;
    std::uint64_t seed = 1;
    std::string out_dir = "data", config_path, data_path, out_path, loss_log_path;
    std::string ckpt_path, pred_path, ref_path, image_path, out_prefix = "heatmap";
    std::vector<std::string> image_paths;

    auto* synth = app.add_subcommand("synth-data", "Render a synthetic shape-caption dataset");
    synth->add_option("--count", count, "Number of samples");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--out", out_dir, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train the encoder-decoder model");
    train->add_option("--config", config_path, "Config file")->required();
    train->add_option("--data", data_path, "Manifest TSV")->required();
    train->add_option("--out", out_path, "Checkpoint output path")->required();
    train->add_option("--loss-log", loss_log_path, "Loss CSV output path");

    auto* gen = app.add_subcommand("generate", "Caption images with a trained checkpoint");
    gen->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
    gen->add_option("--image", image_paths, "Image file(s)");
    gen->add_option("--data", data_path, "Manifest TSV of images to caption");
    gen->add_option("--out", out_path, "Caption TSV output (default stdout)");

    auto* eval = app.add_subcommand("evaluate", "Score predictions against references");
    eval->add_option("--predictions", pred_path, "Prediction TSV")->required();
    eval->add_option("--references", ref_path, "Reference TSV")->required();
    eval->add_option("--out", out_path, "Report JSON output (default stdout)");

    auto* heat = app.add_subcommand("heatmap", "Export an attention heatmap grid");
    heat->add_option("--checkpoint", ckpt_path, "Checkpoint path")->required();
    heat->add_option("--image", image_path, "Image file")->required();
    heat->add_option("--layer", layer, "Encoder layer index");
    heat->add_option("--head", head, "Attention head index");
    heat->add_option("--patch", patch, "Query patch index");
    heat->add_option("--out", out_prefix, "Output path prefix (.csv and .pgm)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth_data(count, seed, out_dir);
        if (train->parsed()) return cmd_train(config_path, data_path, out_path, loss_log_path);
        if (gen->parsed()) return cmd_generate(ckpt_path, image_paths, data_path, out_path);
        if (eval->parsed()) return cmd_evaluate(pred_path, ref_path, out_path);
        if (heat->parsed())
            return cmd_heatmap(ckpt_path, image_path, layer, head, patch, out_prefix);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
