// Copyright 2026 The corpusforge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// corpusforge command-line tool. Exit codes: 0 ok, 1 runtime failure,
// 2 usage or config error. Logs go to stderr; machine output to files or
// stdout.

#include "corpusforge.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace corpusforge;

namespace {

// Config problems found after argument parsing.
struct UsageError : Error {
  using Error::Error;
};

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    detail::write_file_atomic(path, content);
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::vector<std::string> out;
  std::istringstream in(path == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                    : detail::read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Audio paths in a manifest are relative to the manifest's directory.
fs::path resolve_audio(const corpus::UtteranceRecord& r, const fs::path& base) {
  fs::path p(r.audio_path);
  return p.is_absolute() ? p : base / p;
}

fs::path dir_of(const std::string& file) {
  fs::path p(file);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

std::map<std::string, std::string> read_tsv_map(const std::string& path) {
  std::map<std::string, std::string> out;
  for (const auto& line : read_lines(path)) {
    const auto tab = line.find('\t');
    if (line.empty() || line[0] == '#' || tab == std::string::npos) continue;
    out[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct VadArgs {
  std::string in, out_dir, manifest;
  vad::VadConfig config;
};

int run_vad(const VadArgs& a) {
  a.config.validate();
  const AudioBuffer audio = read_wav(a.in);
  const auto spans = vad::collect_spans(audio, a.config);
  const auto plan = vad::plan_chunks(audio, spans, a.config);
  fs::create_directories(a.out_dir);
  corpus::Manifest m;
  const std::string stem = fs::path(a.in).stem().string();
  for (std::size_t k = 0; k < plan.kept.size(); ++k) {
    const auto& s = plan.kept[k];
    char buf[16];
    std::snprintf(buf, sizeof(buf), "_%04zu", k);
    corpus::UtteranceRecord r;
    r.utt_id = stem + buf;
    r.source = stem;
    const fs::path wav = fs::path(a.out_dir) / (r.utt_id + ".wav");
    write_wav(audio.slice(s.start_sample, s.end_sample), wav);
    r.audio_path = a.manifest.empty() ? wav.string() : fs::relative(wav, dir_of(a.manifest)).generic_string();
    r.duration_s = s.duration_s(audio.sample_rate);
    r.status = corpus::Status::kVadOk;
    r.extra["start_s"] = static_cast<double>(s.start_sample) / audio.sample_rate;
    r.extra["end_s"] = static_cast<double>(s.end_sample) / audio.sample_rate;
    m.push_back(std::move(r));
  }
  std::cerr << "vad: " << spans.size() << " span(s), " << plan.kept.size() << " chunk(s) kept, " << plan.dropped.size()
            << " dropped as too short\n";
  write_text(a.manifest, corpus::serialize(m));
  return 0;
}

struct SnrArgs {
  std::vector<std::string> wavs;
  std::string manifest, out, rejected;
  snr::SnrThresholds thresholds;
};

int run_snr(const SnrArgs& a) {
  a.thresholds.validate();
  if (!a.wavs.empty()) {
    for (const auto& w : a.wavs) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3f", snr::wada_snr(read_wav(w)).db);
      std::cout << w << '\t' << buf << '\n';
    }
    return 0;
  }
  if (a.manifest.empty()) throw UsageError("snr: give WAV files or --manifest");
  const auto in = corpus::read_manifest(a.manifest);
  corpus::Manifest kept, rejected;
  for (auto r : in) {
    r.snr_db = snr::wada_snr(read_wav(resolve_audio(r, dir_of(a.manifest)))).db;
    if (auto reason = snr::rejection_reason(*r.snr_db, a.thresholds)) {
      r.status = corpus::Status::kSnrRejected;
      r.extra["reason"] = *reason;
      rejected.push_back(std::move(r));
    } else {
      kept.push_back(std::move(r));
    }
  }
  std::cerr << "snr: kept " << kept.size() << ", rejected " << rejected.size() << '\n';
  write_text(a.out, corpus::serialize(kept));
  if (!a.rejected.empty()) corpus::write_manifest(a.rejected, rejected);
  return 0;
}

int run_embed(const std::string& manifest, const std::string& out, std::size_t dim) {
  const auto in = corpus::read_manifest(manifest);
  std::vector<speaker::Embedding> embs;
  for (const auto& r : in) {
    embs.push_back(speaker::embed_mfcc_stats(mfcc(read_wav(resolve_audio(r, dir_of(manifest)))), dim, r.utt_id));
  }
  speaker::save_embeddings(out, embs);
  std::cerr << "embed: " << embs.size() << " embedding(s), dim " << dim << '\n';
  return 0;
}

int run_cluster(const std::string& embeddings, const speaker::HdbscanParams& params, const std::string& out) {
  params.validate();
  const auto embs = speaker::load_embeddings(embeddings);
  const auto a = speaker::hdbscan(embs, params);
  std::string text;
  std::size_t noise = 0;
  for (const auto& e : embs) {
    const int c = a.label_of(e.utt_id);
    noise += c == speaker::kNoise;
    text += nlohmann::json{{"utt_id", e.utt_id}, {"cluster", c}}.dump() + "\n";
  }
  std::cerr << "cluster: " << a.n_clusters << " cluster(s), " << noise << " noise point(s)\n";
  write_text(out, text);
  return 0;
}

int run_gender_train(const std::string& embeddings, const std::string& labels, const gender::SmoOptions& opt,
                     const std::string& out) {
  const auto embs = speaker::load_embeddings(embeddings);
  const auto truth = read_tsv_map(labels);
  gender::LabeledSet data;
  for (const auto& e : embs) {
    auto it = truth.find(e.utt_id);
    if (it == truth.end()) continue;
    data.push_back({e, gender::parse_gender(it->second)});
  }
  if (data.empty()) throw Error("no labelled embeddings");
  const auto r = gender::train_svm_smo_full(data, opt);
  gender::save_model(out, r.model);
  std::cerr << "gender: trained on " << data.size() << " example(s), " << r.model.support_vectors.size()
            << " support vector(s)\n";
  return 0;
}

int run_gender_predict(const std::string& model_path, const std::string& embeddings, const std::string& clusters,
                       const std::string& out) {
  const auto model = gender::load_model(model_path);
  const auto embs = speaker::load_embeddings(embeddings);
  std::map<std::string, gender::Prediction> preds;
  for (const auto& e : embs) preds[e.utt_id] = gender::predict(model, e);
  std::map<int, gender::Gender> dominant;
  speaker::ClusterAssignment assignment;
  if (!clusters.empty()) {
    for (const auto& line : read_lines(clusters)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      assignment.labels[j.at("utt_id").get<std::string>()] = j.at("cluster").get<int>();
    }
    dominant = gender::dominant_gender(assignment, preds);
  }
  std::string text;
  for (const auto& e : embs) {
    const auto& p = preds.at(e.utt_id);
    nlohmann::json j = {{"utt_id", e.utt_id}, {"gender", gender::to_string(p.label)}, {"margin", p.margin}};
    if (auto it = assignment.labels.find(e.utt_id); it != assignment.labels.end() && it->second != speaker::kNoise) {
      j["cluster"] = it->second;
      j["cluster_gender"] = gender::to_string(dominant.at(it->second));
    }
    text += j.dump() + "\n";
  }
  write_text(out, text);
  return 0;
}

int run_select(const std::string& manifest, double cap, const std::string& out, const std::string& rejected_path) {
  const auto in = corpus::read_manifest(manifest);
  std::vector<speaker::BudgetRecord> recs;
  for (const auto& r : in) {
    if (!r.snr_db || !r.speaker_cluster) throw Error("select needs snr_db and speaker_cluster on " + r.utt_id);
    recs.push_back({r.utt_id, r.duration_s, *r.snr_db, *r.speaker_cluster});
  }
  const auto sel = speaker::select_budget(recs, {cap});
  const std::set<std::string> selected(sel.selected.begin(), sel.selected.end());
  const std::set<std::string> unclustered(sel.unclustered.begin(), sel.unclustered.end());
  corpus::Manifest kept, rejected;
  for (auto r : in) {
    if (selected.count(r.utt_id)) {
      r.status = corpus::Status::kSelected;
      kept.push_back(std::move(r));
    } else {
      r.extra["reason"] = unclustered.count(r.utt_id) ? "unclustered" : "over_budget";
      rejected.push_back(std::move(r));
    }
  }
  std::cerr << "select: " << kept.size() << " selected, " << sel.over_budget.size() << " over budget, "
            << sel.unclustered.size() << " unclustered\n";
  write_text(out, corpus::serialize(kept));
  if (!rejected_path.empty()) corpus::write_manifest(rejected_path, rejected);
  return 0;
}

int run_align(const std::string& audio, const std::string& text_path, const std::string& provider_name,
              std::optional<std::size_t> band, const std::string& out) {
  const auto fragments = align::fragments_from_lines(detail::read_file(text_path));
  const auto provider = align::make_provider(provider_name);
  align::AlignOptions opt;
  opt.dtw.band = band;
  const auto result = align::align(read_wav(audio), fragments, *provider, opt);
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t k = 0; k < result.size(); ++k) {
    j.push_back({{"id", result[k].fragment_id},
                 {"text", fragments[k].text},
                 {"start_s", result[k].start_s},
                 {"end_s", result[k].end_s},
                 {"confidence", result[k].confidence}});
  }
  write_text(out, j.dump(2) + "\n");
  return 0;
}

int run_textclean(const std::string& vocab_path, const std::string& in_path, const std::string& out,
                  const std::string& rejected_path, const std::string& report_path) {
  const auto vocab = text::load_vocabulary(pipeline::resolve_vocab(vocab_path, "."));
  const auto in = corpus::read_manifest(in_path);
  text::CleanReport report;
  corpus::Manifest kept, rejected;
  for (auto r : in) {
    if (!r.transcript) {
      kept.push_back(std::move(r));
      continue;
    }
    const auto c = text::clean_transcript(*r.transcript, vocab, &report);
    if (c.status == text::CleanStatus::kKept) {
      r.transcript = c.text;
      kept.push_back(std::move(r));
    } else {
      r.status =
          c.status == text::CleanStatus::kNumeric ? corpus::Status::kNumericRejected : corpus::Status::kForeignRejected;
      r.extra["reason"] = c.status == text::CleanStatus::kNumeric ? "numeric" : "foreign";
      rejected.push_back(std::move(r));
    }
  }
  write_text(out, corpus::serialize(kept));
  if (!rejected_path.empty()) corpus::write_manifest(rejected_path, rejected);
  if (!report_path.empty()) {
    nlohmann::json removed = nlohmann::json::object();
    for (const auto& [ch, n] : report.chars_removed) removed[text::code_point_to_utf8(ch)] = n;
    nlohmann::json j = {{"kept", report.kept},
                        {"dropped_foreign", report.dropped_foreign},
                        {"dropped_numeric", report.dropped_numeric},
                        {"chars_removed", removed}};
    detail::write_file_atomic(report_path, j.dump(2) + "\n");
  }
  std::cerr << "textclean: kept " << report.kept << ", foreign " << report.dropped_foreign << ", numeric "
            << report.dropped_numeric << '\n';
  return 0;
}

int run_split(const std::string& manifest, const std::string& out_dir, const corpus::SplitSpec& spec) {
  const auto parts = corpus::split_by_speaker(corpus::read_manifest(manifest), spec);
  for (const auto& w : parts.warnings) std::cerr << "split: warning: " << w << '\n';
  fs::create_directories(out_dir);
  const char* names[] = {"train", "dev", "test"};
  for (std::size_t k = 0; k < 3; ++k) {
    corpus::write_manifest(fs::path(out_dir) / (std::string(names[k]) + ".jsonl"), parts.part(k));
    std::cerr << "split: " << names[k] << " " << parts.part(k).size() << '\n';
  }
  return 0;
}

int run_stats(const std::string& manifest) {
  std::cout << corpus::to_json(corpus::stats(corpus::read_manifest(manifest))).dump(2) << '\n';
  return 0;
}

int run_lm_train(const std::string& corpus_path, int order, std::size_t top_k, const std::string& out) {
  const auto sentences = lm::tokenize_corpus(detail::read_file(corpus_path));
  const auto vocab = lm::build_vocab(sentences, top_k);
  const auto r = lm::train_ngram_full(sentences, vocab, {order});
  for (const auto& w : r.warnings) std::cerr << "lm: warning: " << w << '\n';
  lm::write_arpa(out, r.model);
  std::cerr << "lm: order " << r.model.order() << ", vocabulary " << vocab.size() << '\n';
  return 0;
}

int run_lm_score(const std::string& lm_path, const std::string& text_path) {
  const auto model = lm::read_arpa(lm_path);
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& line : read_lines(text_path)) {
    const auto words = lm::tokenize(line);
    if (words.empty()) continue;
    const auto s = model.score(words);
    total += s.total;
    tokens += s.per_token.size();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", s.total);
    std::cout << buf << '\t' << line << '\n';
  }
  if (tokens) {
    std::fprintf(stderr, "lm: total log10 %.4f over %zu token(s), perplexity %.3f\n", total, tokens,
                 std::pow(10.0, -total / static_cast<double>(tokens)));
  }
  return 0;
}

int run_decode(const std::vector<std::string>& emissions, const std::string& lm_path, decode::DecoderConfig cfg,
               bool greedy, std::size_t jobs, const std::string& out) {
  std::vector<decode::EmissionMatrix> batch;
  for (const auto& e : emissions) batch.push_back(decode::load_emissions(e));
  std::optional<lm::NGramModel> model;
  if (!lm_path.empty()) model = lm::read_arpa(lm_path);
  std::vector<std::string> hyps(batch.size());
  if (greedy) {
    for (std::size_t i = 0; i < batch.size(); ++i) hyps[i] = decode::greedy_decode(batch[i]);
  } else {
    hyps = decode::decode_batch(batch, model ? &*model : nullptr, cfg, jobs);
  }
  std::string text;
  for (const auto& h : hyps) text += h + "\n";
  write_text(out, text);
  return 0;
}

int run_score(const std::string& ref_path, const std::string& hyp_path) {
  const auto refs = read_lines(ref_path);
  auto hyps = read_lines(hyp_path);
  if (hyps.size() > refs.size()) throw Error("more hypotheses than references");
  hyps.resize(refs.size());
  decode::ErrorCounts w, c;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (lm::tokenize(refs[i]).empty()) continue;
    w += decode::word_errors(refs[i], hyps[i]);
    c += decode::char_errors(refs[i], hyps[i]);
  }
  if (w.ref_length == 0) throw Error("empty reference");
  std::printf("WER: %.2f%%\nCER: %.2f%%\n", 100.0 * w.rate(), 100.0 * c.rate());
  return 0;
}

int run_itn(const std::string& lang, bool years, const std::string& in, const std::string& out) {
  const auto fst = itn::compile_number_grammar(lang, {years});
  std::string text;
  for (const auto& line : read_lines(in)) text += itn::itn_text(line, fst) + "\n";
  write_text(out, text);
  return 0;
}

pipeline::ParsedConfig load_config(const std::string& path) {
  try {
    return pipeline::parse_config(path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

int run_pipeline_validate(const std::string& config) {
  const auto parsed = load_config(config);
  for (const auto& d : parsed.diagnostics) std::cerr << d.str() << '\n';
  if (!parsed.ok()) return 2;
  std::cerr << "config ok\n";
  return 0;
}

int run_pipeline(const std::string& config, bool force, std::size_t jobs) {
  const auto parsed = load_config(config);
  for (const auto& d : parsed.diagnostics) std::cerr << d.str() << '\n';
  if (!parsed.ok()) return 2;
  pipeline::RunOptions opt;
  opt.force = force;
  if (jobs > 0) opt.jobs = jobs;
  opt.log = &std::cerr;
  const auto report = pipeline::run_pipeline(parsed.config, opt);
  std::cout << report.to_json().dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corpusforge: speech corpus curation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "corpusforge 0.1.0");
  std::function<int()> action;

  VadArgs vad_args;
  auto* vad_cmd = app.add_subcommand("vad", "Split a recording into voiced chunks");
  vad_cmd->add_option("--in", vad_args.in, "Input WAV")->required();
  vad_cmd->add_option("--out-dir", vad_args.out_dir, "Directory for chunk WAVs")->required();
  vad_cmd->add_option("--manifest", vad_args.manifest, "Output manifest (default stdout)");
  vad_cmd->add_option("--aggressiveness", vad_args.config.aggressiveness)->check(CLI::Range(0, 3));
  vad_cmd->add_option("--frame-ms", vad_args.config.frame_ms);
  vad_cmd->add_option("--padding-ms", vad_args.config.padding_ms);
  vad_cmd->add_option("--trigger-ratio", vad_args.config.trigger_ratio);
  vad_cmd->add_option("--min-chunk", vad_args.config.min_chunk_s, "Seconds");
  vad_cmd->add_option("--max-chunk", vad_args.config.max_chunk_s, "Seconds");
  vad_cmd->callback([&] { action = [&] { return run_vad(vad_args); }; });

  SnrArgs snr_args;
  auto* snr_cmd = app.add_subcommand("snr", "Estimate WADA SNR and filter a manifest");
  snr_cmd->add_option("wavs", snr_args.wavs, "WAV files to measure");
  snr_cmd->add_option("--manifest", snr_args.manifest);
  snr_cmd->add_option("--out", snr_args.out, "Kept records (default stdout)");
  snr_cmd->add_option("--rejected", snr_args.rejected);
  snr_cmd->add_option("--min-db", snr_args.thresholds.min_db);
  snr_cmd->add_option("--max-db", snr_args.thresholds.max_db);
  snr_cmd->callback([&] { action = [&] { return run_snr(snr_args); }; });

  std::string embed_manifest, embed_out;
  std::size_t embed_dim = speaker::kDefaultDim;
  auto* embed_cmd = app.add_subcommand("embed", "Compute utterance embeddings");
  embed_cmd->add_option("--manifest", embed_manifest)->required();
  embed_cmd->add_option("--out", embed_out)->required();
  embed_cmd->add_option("--dim", embed_dim);
  embed_cmd->callback([&] { action = [&] { return run_embed(embed_manifest, embed_out, embed_dim); }; });

  std::string cluster_emb, cluster_out;
  speaker::HdbscanParams hdb;
  auto* cluster_cmd = app.add_subcommand("cluster", "HDBSCAN speaker clustering");
  cluster_cmd->add_option("--embeddings", cluster_emb)->required();
  cluster_cmd->add_option("--min-cluster-size", hdb.min_cluster_size);
  cluster_cmd->add_option("--min-samples", hdb.min_samples);
  cluster_cmd->add_option("--out", cluster_out);
  cluster_cmd->callback([&] { action = [&] { return run_cluster(cluster_emb, hdb, cluster_out); }; });

  auto* gender_cmd = app.add_subcommand("gender", "Gender SVM");
  gender_cmd->require_subcommand(1);
  std::string g_emb, g_labels, g_out, g_model, g_clusters;
  gender::SmoOptions smo;
  auto* gtrain = gender_cmd->add_subcommand("train", "Train the RBF SVM");
  gtrain->add_option("--embeddings", g_emb)->required();
  gtrain->add_option("--labels", g_labels, "TSV: utt_id<TAB>male|female")->required();
  gtrain->add_option("--gamma", smo.gamma);
  gtrain->add_option("--c", smo.c);
  gtrain->add_option("--seed", smo.seed);
  gtrain->add_option("--out", g_out)->required();
  gtrain->callback([&] { action = [&] { return run_gender_train(g_emb, g_labels, smo, g_out); }; });
  auto* gpred = gender_cmd->add_subcommand("predict", "Predict gender per utterance");
  gpred->add_option("--model", g_model)->required();
  gpred->add_option("--embeddings", g_emb)->required();
  gpred->add_option("--clusters", g_clusters, "Cluster JSONL for the dominant-gender vote");
  gpred->add_option("--out", g_out);
  gpred->callback([&] { action = [&] { return run_gender_predict(g_model, g_emb, g_clusters, g_out); }; });

  std::string sel_manifest, sel_out, sel_rejected;
  double cap = 90.0;
  auto* sel_cmd = app.add_subcommand("select", "Per-speaker SNR-ranked budget");
  sel_cmd->add_option("--manifest", sel_manifest)->required();
  sel_cmd->add_option("--cap-minutes", cap);
  sel_cmd->add_option("--out", sel_out);
  sel_cmd->add_option("--rejected", sel_rejected);
  sel_cmd->callback([&] { action = [&] { return run_select(sel_manifest, cap, sel_out, sel_rejected); }; });

  std::string al_audio, al_text, al_provider = "tone-code", al_out;
  std::size_t al_band = 0;
  auto* align_cmd = app.add_subcommand("align", "Forced alignment by DTW against synthesized speech");
  align_cmd->add_option("--audio", al_audio)->required();
  align_cmd->add_option("--text", al_text, "One fragment per line")->required();
  align_cmd->add_option("--provider", al_provider)->check(CLI::IsMember({"tone-code", "espeak"}));
  align_cmd->add_option("--band", al_band, "Sakoe-Chiba half-width in frames (0 = none)");
  align_cmd->add_option("--out", al_out);
  align_cmd->callback([&] {
    action = [&] {
      return run_align(al_audio, al_text, al_provider, al_band ? std::optional<std::size_t>(al_band) : std::nullopt,
                       al_out);
    };
  });

  std::string tc_vocab, tc_in, tc_out, tc_rejected, tc_report;
  auto* tc_cmd = app.add_subcommand("textclean", "Clean transcripts against a character vocabulary");
  tc_cmd->add_option("--vocab", tc_vocab, "Vocabulary file or language tag")->required();
  tc_cmd->add_option("--in", tc_in)->required();
  tc_cmd->add_option("--out", tc_out);
  tc_cmd->add_option("--rejected", tc_rejected);
  tc_cmd->add_option("--report", tc_report);
  tc_cmd->callback([&] { action = [&] { return run_textclean(tc_vocab, tc_in, tc_out, tc_rejected, tc_report); }; });

  std::string sp_manifest, sp_out;
  corpus::SplitSpec spec;
  auto* split_cmd = app.add_subcommand("split", "Speaker-disjoint train/dev/test split");
  split_cmd->add_option("--manifest", sp_manifest)->required();
  split_cmd->add_option("--out-dir", sp_out)->required();
  split_cmd->add_option("--train", spec.ratios[0]);
  split_cmd->add_option("--dev", spec.ratios[1]);
  split_cmd->add_option("--test", spec.ratios[2]);
  split_cmd->add_option("--seed", spec.seed);
  split_cmd->callback([&] { action = [&] { return run_split(sp_manifest, sp_out, spec); }; });

  std::string st_manifest;
  auto* stats_cmd = app.add_subcommand("stats", "Manifest statistics as JSON");
  stats_cmd->add_option("--manifest", st_manifest)->required();
  stats_cmd->callback([&] { action = [&] { return run_stats(st_manifest); }; });

  auto* lm_cmd = app.add_subcommand("lm", "n-gram language model");
  lm_cmd->require_subcommand(1);
  std::string lm_corpus, lm_out, lm_path, lm_text;
  int lm_order = 5;
  std::size_t top_k = 500000;
  auto* lm_train = lm_cmd->add_subcommand("train", "Train a modified Kneser-Ney model");
  lm_train->add_option("--corpus", lm_corpus)->required();
  lm_train->add_option("--order", lm_order)->check(CLI::Range(1, 5));
  lm_train->add_option("--top-k", top_k);
  lm_train->add_option("--out", lm_out)->required();
  lm_train->callback([&] { action = [&] { return run_lm_train(lm_corpus, lm_order, top_k, lm_out); }; });
  auto* lm_score = lm_cmd->add_subcommand("score", "Score sentences (log10)");
  lm_score->add_option("--lm", lm_path)->required();
  lm_score->add_option("--text", lm_text)->required();
  lm_score->callback([&] { action = [&] { return run_lm_score(lm_path, lm_text); }; });

  std::vector<std::string> dec_em;
  std::string dec_lm, dec_out;
  decode::DecoderConfig dcfg;
  bool greedy = false;
  std::size_t dec_jobs = 1;
  auto* dec_cmd = app.add_subcommand("decode", "CTC decoding of emission files");
  dec_cmd->add_option("--emissions", dec_em, "CFEM files, one hypothesis line each")->required();
  dec_cmd->add_option("--lm", dec_lm, "ARPA model");
  dec_cmd->add_option("--beam", dcfg.beam_width);
  dec_cmd->add_option("--lm-weight", dcfg.lm_weight);
  dec_cmd->add_option("--word-penalty", dcfg.word_insertion_penalty);
  dec_cmd->add_flag("--greedy", greedy);
  dec_cmd->add_option("--jobs", dec_jobs);
  dec_cmd->add_option("--out", dec_out);
  dec_cmd->callback([&] { action = [&] { return run_decode(dec_em, dec_lm, dcfg, greedy, dec_jobs, dec_out); }; });

  std::string sc_ref, sc_hyp;
  auto* score_cmd = app.add_subcommand("score", "WER and CER of hypotheses against references");
  score_cmd->add_option("--ref", sc_ref)->required();
  score_cmd->add_option("--hyp", sc_hyp)->required();
  score_cmd->callback([&] { action = [&] { return run_score(sc_ref, sc_hyp); }; });

  std::string itn_lang, itn_in = "-", itn_out;
  bool years = false;
  auto* itn_cmd = app.add_subcommand("itn", "Spoken numbers to digits");
  itn_cmd->add_option("--lang", itn_lang)->required();
  itn_cmd->add_option("--in", itn_in);
  itn_cmd->add_option("--out", itn_out);
  itn_cmd->add_flag("--years", years, "Also read pairs of two-digit groups as years");
  itn_cmd->callback([&] { action = [&] { return run_itn(itn_lang, years, itn_in, itn_out); }; });

  auto* pipe_cmd = app.add_subcommand("pipeline", "Config-driven pipeline");
  pipe_cmd->require_subcommand(1);
  std::string pconfig;
  bool force = false;
  std::size_t pjobs = 0;
  auto* prun = pipe_cmd->add_subcommand("run", "Run all configured stages");
  prun->add_option("--config", pconfig)->required();
  prun->add_flag("--force", force, "Re-run stages even when up to date");
  prun->add_option("--jobs", pjobs, "Worker threads (overrides the config)");
  prun->callback([&] { action = [&] { return run_pipeline(pconfig, force, pjobs); }; });
  auto* pval = pipe_cmd->add_subcommand("validate", "Check a config file");
  pval->add_option("--config", pconfig)->required();
  pval->callback([&] { action = [&] { return run_pipeline_validate(pconfig); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
