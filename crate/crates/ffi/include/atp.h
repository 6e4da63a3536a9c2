#ifndef ATP_H
#define ATP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AtpStatus {
  ATP_STATUS_OK = 0,
  ATP_STATUS_NULL_POINTER = 1,
  ATP_STATUS_INVALID_ARGUMENT = 2,
  ATP_STATUS_IO = 3,
  ATP_STATUS_FORMAT = 4,
  ATP_STATUS_DIMENSION = 5,
  ATP_STATUS_THRESHOLD = 6,
  ATP_STATUS_MODEL = 7,
  ATP_STATUS_LAYOUT_MISMATCH = 8,
  ATP_STATUS_BUFFER_TOO_SMALL = 9,
  ATP_STATUS_PANIC = 10,
} AtpStatus;

// Feature extractor bound to a working size, diffusion settings and a threshold table.
typedef struct AtpExtractor AtpExtractor;

// Trained classifier.
typedef struct AtpModel AtpModel;

// Detection scores; undefined values (zero denominators) are NaN.
typedef struct AtpScores {
  double accuracy;
  double precision;
  double recall;
  double f1;
} AtpScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next `atp_*` call on the same thread.
const char *atp_last_error(void);

// Library version as a static nul-terminated string.
const char *atp_version(void);

// Extractor for `rows x cols` images with default diffusion and the bundled thresholds.
enum AtpStatus atp_extractor_new_bundled(size_t rows, size_t cols, struct AtpExtractor **out);

// Extractor using a threshold table JSON file and explicit diffusion settings.
enum AtpStatus atp_extractor_new(size_t rows,
                                 size_t cols,
                                 const char *thresholds_path,
                                 double sigma,
                                 size_t iterations,
                                 double step,
                                 struct AtpExtractor **out);

// Number of features produced per image, or 0 for a null handle.
size_t atp_extractor_feature_len(const struct AtpExtractor *extractor);

// Extracts the feature vector of a working-size image into `out`.
enum AtpStatus atp_extractor_extract(const struct AtpExtractor *extractor,
                                     const double *pixels,
                                     size_t rows,
                                     size_t cols,
                                     double *out,
                                     size_t out_len);

void atp_extractor_free(struct AtpExtractor *extractor);

// Loads a model JSON file.
enum AtpStatus atp_model_load(const char *path, struct AtpModel **out);

// Feature dimension the model expects, or 0 for a null handle.
size_t atp_model_dim(const struct AtpModel *model);

// Fails with the layout-mismatch status unless the model was trained on this extractor's layout.
enum AtpStatus atp_model_check_extractor(const struct AtpModel *model,
                                         const struct AtpExtractor *extractor);

// Classifies one feature vector: `label` is +1 (fake) or -1 (real), `score` the raw decision value.
enum AtpStatus atp_model_predict(const struct AtpModel *model,
                                 const double *features,
                                 size_t len,
                                 int32_t *label,
                                 double *score);

void atp_model_free(struct AtpModel *model);

// Perona-Malik diffusion of a `rows x cols` image into `out` (same size).
enum AtpStatus atp_diffuse(const double *pixels,
                           size_t rows,
                           size_t cols,
                           double sigma,
                           size_t iterations,
                           double step,
                           double *out,
                           size_t out_len);

// ATP code image of one subband for `k` thresholds.
enum AtpStatus atp_pattern(const double *pixels,
                           size_t rows,
                           size_t cols,
                           const double *thresholds,
                           size_t k,
                           uint32_t *out,
                           size_t out_len);

// Zeroes each pixel independently with probability `rate`.
enum AtpStatus atp_pixel_missing(const double *pixels,
                                 size_t rows,
                                 size_t cols,
                                 double rate,
                                 uint64_t seed,
                                 double *out,
                                 size_t out_len);

// Zeroes a centered `height x width` block.
enum AtpStatus atp_block_missing(const double *pixels,
                                 size_t rows,
                                 size_t cols,
                                 size_t height,
                                 size_t width,
                                 double *out,
                                 size_t out_len);

// Adds white Gaussian noise at `snr_db` relative to the mean-square signal power.
enum AtpStatus atp_awgn(const double *pixels,
                        size_t rows,
                        size_t cols,
                        double snr_db,
                        uint64_t seed,
                        double *out,
                        size_t out_len);

// Accuracy, precision, recall and F1 from confusion counts (positive class: fake).
enum AtpStatus atp_scores(uint64_t tp,
                          uint64_t tn,
                          uint64_t fp,
                          uint64_t fneg,
                          struct AtpScores *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATP_H */
