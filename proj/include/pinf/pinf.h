/* C interface to the reconstruction library. All objects are opaque handles
 * owned by the caller and released with the matching *_free function.
 * Every call returns a status; on failure pinf_last_error() describes it. */
#ifndef PINF_PINF_H
#define PINF_PINF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PINF_API __declspec(dllexport)
#else
#define PINF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pinf_status {
  PINF_OK = 0,
  PINF_E_ARGUMENT = 1,   /* bad parameter, config or inconsistent inputs */
  PINF_E_IO = 2,         /* file missing, unreadable or malformed */
  PINF_E_NUMERIC = 3,    /* non-finite loss or values */
  PINF_E_CONTRACT = 4,   /* an external component broke its contract */
  PINF_E_STRUCTURAL = 5, /* invalid model layout */
  PINF_E_INTERNAL = 6
} pinf_status;

typedef struct pinf_dataset pinf_dataset;
typedef struct pinf_config pinf_config;
typedef struct pinf_model pinf_model;
typedef struct pinf_report pinf_report;

PINF_API const char* pinf_version(void);
/* Message of the last failed call on this thread; empty after a success. */
PINF_API const char* pinf_last_error(void);
/* Frees strings returned through char** out parameters. */
PINF_API void pinf_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

typedef struct pinf_scene_params {
  const char* kind; /* "plume" or "hybrid" */
  int grid;
  int frames;
  int image_size;
  uint64_t seed;
} pinf_scene_params;

PINF_API void pinf_scene_params_default(pinf_scene_params* p);
PINF_API pinf_status pinf_dataset_generate(const pinf_scene_params* p, pinf_dataset** out);
PINF_API pinf_status pinf_dataset_load(const char* dir, pinf_dataset** out);
PINF_API pinf_status pinf_dataset_save(const pinf_dataset* ds, const char* dir);

typedef struct pinf_dataset_info {
  int frames;
  int cameras;
  int held_out_cameras;
  int width; /* of camera 0 */
  int height;
  int hybrid;           /* scene has a static obstacle */
  int has_ground_truth; /* density and velocity grids present */
  int grid;             /* ground-truth cells per axis, 0 without ground truth */
} pinf_dataset_info;

PINF_API pinf_status pinf_dataset_get_info(const pinf_dataset* ds, pinf_dataset_info* info);
PINF_API void pinf_dataset_free(pinf_dataset* ds);

/* ---- training configuration ---------------------------------------------
 * JSON layout: {"train": {...}, "weights": {...}}; missing keys keep their
 * defaults. */

PINF_API pinf_status pinf_config_create(const char* json, pinf_config** out); /* json may be NULL */
PINF_API pinf_status pinf_config_load(const char* path, pinf_config** out);
/* Overlays the keys present in `json`. */
PINF_API pinf_status pinf_config_merge(pinf_config* cfg, const char* json);
PINF_API pinf_status pinf_config_to_json(const pinf_config* cfg, char** out);
PINF_API void pinf_config_free(pinf_config* cfg);

/* ---- models ------------------------------------------------------------- */

/* Fresh networks sized by the config and seeded from its train.seed. */
PINF_API pinf_status pinf_model_create(const pinf_config* cfg, const pinf_dataset* ds, pinf_model** out);
PINF_API pinf_status pinf_model_load(const char* path, pinf_model** out);
PINF_API pinf_status pinf_model_save(const pinf_model* m, const char* path);
PINF_API int pinf_model_iteration(const pinf_model* m);
PINF_API int pinf_model_is_hybrid(const pinf_model* m);
PINF_API void pinf_model_free(pinf_model* m);

typedef struct pinf_losses {
  double img, vgg, ghost, transport, nse, d2v, overlay, total;
} pinf_losses;

typedef void (*pinf_progress_fn)(int iter, const pinf_losses* losses, void* user);

/* Trains `m` in place. oracle_command: NULL uses the dataset's ground-truth
 * velocity when present (no prior otherwise), "" disables the prior, any
 * other string runs an external prior ({in}/{out} grid paths). out_dir may
 * be NULL to skip logs and checkpoints. */
PINF_API pinf_status pinf_train(pinf_model* m, const pinf_dataset* ds, const pinf_config* cfg,
                                const char* oracle_command, const char* out_dir, pinf_progress_fn progress,
                                void* user);

/* ---- rendering ------------------------------------------------------------ */

/* Writes width*height*3 floats in [0, 1], row-major; rgb_len must match. */
PINF_API pinf_status pinf_render(const pinf_model* m, const pinf_dataset* ds, int camera, double frame, double* rgb,
                                 size_t rgb_len);
PINF_API pinf_status pinf_render_png(const pinf_model* m, const pinf_dataset* ds, int camera, double frame,
                                     const char* path);
/* Middle-slice velocity and vorticity maps (front, side, top) at `frame` as
 * PNGs in dir. Color ranges are fixed over the sequence. A NULL model
 * exports the ground truth. */
PINF_API pinf_status pinf_export_slices(const pinf_model* m, const pinf_dataset* ds, int frame, const char* dir);

/* ---- evaluation ----------------------------------------------------------- */

/* Compares the model (or, for a NULL model, the ground truth itself) with the
 * dataset's ground-truth grids. */
PINF_API pinf_status pinf_evaluate(const pinf_model* m, const pinf_dataset* ds, pinf_report** out);
PINF_API pinf_status pinf_report_json(const pinf_report* r, char** out);
PINF_API pinf_status pinf_report_csv(const pinf_report* r, char** out);

typedef struct pinf_summary {
  double l2_sigma, l2_u, div, warp, midwarp;
  double velocity_cosine; /* masked where sigma_gt > 10% of the frame max */
  double heldout_psnr;    /* NaN without a model */
} pinf_summary;

PINF_API pinf_status pinf_report_summary(const pinf_report* r, pinf_summary* out);
PINF_API void pinf_report_free(pinf_report* r);

#ifdef __cplusplus
}
#endif

#endif /* PINF_PINF_H */
