#ifndef SA_FFI_H
#define SA_FFI_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum SaStatus {
  SA_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  SA_STATUS_ERR_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range or not valid UTF-8.
   */
  SA_STATUS_ERR_INVALID_ARGUMENT = 2,
  SA_STATUS_ERR_IO = 3,
  /**
   * Unreadable, unsupported or mis-sized image.
   */
  SA_STATUS_ERR_IMAGE = 4,
  /**
   * Model file missing, malformed or inconsistent.
   */
  SA_STATUS_ERR_MODEL = 5,
  /**
   * Registry or active-set problem (unknown app, too many apps).
   */
  SA_STATUS_ERR_PAYLOAD = 6,
  /**
   * No tag in the photo.
   */
  SA_STATUS_ERR_TAG_NOT_FOUND = 7,
  /**
   * A tag was found but did not decode to a valid payload.
   */
  SA_STATUS_ERR_DECODE_FAILED = 8,
  /**
   * Policy text failed to parse.
   */
  SA_STATUS_ERR_POLICY = 9,
  /**
   * The caller's buffer is smaller than the reported length.
   */
  SA_STATUS_ERR_BUFFER_TOO_SMALL = 10,
  /**
   * A panic was caught; this is a bug.
   */
  SA_STATUS_ERR_INTERNAL = 11,
} SaStatus;

/**
 * Class labels, in the order of the five-element probability arrays.
 */
typedef enum SaLabel {
  SA_LABEL_NO_SCREEN = 0,
  SA_LABEL_OTHER = 1,
  SA_LABEL_MESSENGER = 2,
  SA_LABEL_FACEBOOK = 3,
  SA_LABEL_GMAIL = 4,
} SaLabel;

/**
 * Flat or hierarchical classifier loaded from a model file.
 */
typedef struct SaClassifier SaClassifier;

/**
 * Decoded image raster (8-bit RGB, row-major).
 */
typedef struct SaImage SaImage;

/**
 * Parsed curation policy.
 */
typedef struct SaPolicy SaPolicy;

/**
 * Ordered ScreenTag app registry.
 */
typedef struct SaRegistry SaRegistry;

/**
 * One classification: label, its confidence and the full distribution.
 */
typedef struct SaClassification {
  enum SaLabel label;
  double confidence;
  /**
   * P(label), indexed by [`SaLabel`].
   */
  double probs[5];
} SaClassification;

/**
 * Attributes of one image for policy evaluation.
 */
typedef struct SaAttributes {
  bool has_screen;
  /**
   * Probability of `has_screen` as stated.
   */
  double screen_confidence;
  /**
   * An [`SaLabel`] value; anything else is rejected.
   */
  uint32_t app;
  double app_confidence;
  /**
   * Comma-separated active apps of a decoded tag; NULL when none was read.
   */
  const char *tag_active;
} SaAttributes;

/**
 * Per-target verdicts, indexed share = 0, upload = 1, retain = 2.
 */
typedef struct SaDecision {
  /**
   * 1 allow, 0 deny.
   */
  uint8_t allow[3];
  /**
   * Deciding rule id, or -1 where the default applied.
   */
  int64_t matched_rule[3];
  bool default_applied;
} SaDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the calling thread's most recent failure; empty after a
 * success. Owned by the library.
 */
const char *sa_last_error(void);

/**
 * Library version, static storage.
 */
const char *sa_version(void);

/**
 * Loads a PPM (P3/P6) or PNG file.
 */
enum SaStatus sa_image_load(const char *path, struct SaImage **out);

/**
 * Copies `width * height * 3` bytes of row-major RGB.
 */
enum SaStatus sa_image_from_rgb(uint32_t width,
                                uint32_t height,
                                const uint8_t *rgb,
                                size_t len,
                                struct SaImage **out);

/**
 * Writes PPM or PNG, chosen by extension.
 */
enum SaStatus sa_image_save(const struct SaImage *image, const char *path);

uint32_t sa_image_width(const struct SaImage *image);

uint32_t sa_image_height(const struct SaImage *image);

/**
 * Pointer to the `width * height * 3` RGB bytes; valid while the image lives.
 */
const uint8_t *sa_image_data(const struct SaImage *image);

/**
 * The 256×256 classifier input for `image`.
 */
enum SaStatus sa_image_preprocess(const struct SaImage *image, struct SaImage **out);

void sa_image_free(struct SaImage *image);

/**
 * Loads a flat 5-way or hierarchical model file.
 */
enum SaStatus sa_classifier_load(const char *path, struct SaClassifier **out);

/**
 * Classifies `image` (any size; it is preprocessed here). A negative
 * `threshold` selects the model's own (0.5 for flat models).
 */
enum SaStatus sa_classifier_classify(const struct SaClassifier *classifier,
                                     const struct SaImage *image,
                                     double threshold,
                                     struct SaClassification *out);

void sa_classifier_free(struct SaClassifier *classifier);

/**
 * Builds a registry from a comma-separated list (1 to 32 unique apps).
 */
enum SaStatus sa_registry_new(const char *apps, struct SaRegistry **out);

size_t sa_registry_len(const struct SaRegistry *registry);

void sa_registry_free(struct SaRegistry *registry);

/**
 * Writes the payload bytes for `active` into `buf`. `out_len` always
 * receives the required length, so a NULL `buf` with `buf_len` 0 queries it.
 */
enum SaStatus sa_payload_encode(const struct SaRegistry *registry,
                                const char *active,
                                uint8_t *buf,
                                size_t buf_len,
                                size_t *out_len);

/**
 * Renders the tag for `active` (comma-separated) at `module_px` pixels per
 * module, with the standard 4-module quiet zone.
 */
enum SaStatus sa_tag_encode(const struct SaRegistry *registry,
                            const char *active,
                            uint32_t module_px,
                            struct SaImage **out);

/**
 * Scans `photo`. On success `app_count` receives the payload's app count
 * and bit i of `active_mask` is set when app i is active.
 */
enum SaStatus sa_tag_scan(const struct SaImage *photo, uint32_t *app_count, uint32_t *active_mask);

enum SaStatus sa_policy_parse(const char *text, struct SaPolicy **out);

enum SaStatus sa_policy_evaluate(const struct SaPolicy *policy,
                                 const struct SaAttributes *attrs,
                                 struct SaDecision *out);

void sa_policy_free(struct SaPolicy *policy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SA_FFI_H */
