#ifndef TFSM_TFSM_H
#define TFSM_TFSM_H

#include <stddef.h>
#include <stdint.h>

#if defined(TFSM_BUILDING_LIBRARY)
#define TFSM_API __attribute__((visibility("default")))
#else
#define TFSM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct tfsm_grammar tfsm_grammar;
typedef struct tfsm_result tfsm_result;
typedef struct tfsm_session tfsm_session;

typedef enum tfsm_status {
  TFSM_OK = 0,
  TFSM_ERR_COMPILE = 1,   /* grammar, signature or inversion error */
  TFSM_ERR_RUNTIME = 2,   /* unknown word, malformed semantics */
  TFSM_ERR_LIMIT = 3,     /* edge or step limit reached; result still returned */
  TFSM_ERR_ARTIFACT = 4,  /* unreadable or corrupt artifact */
  TFSM_ERR_USAGE = 5,     /* bad argument, missing generation program, I/O */
  TFSM_ERR_INTERNAL = 6
} tfsm_status;

typedef struct tfsm_compile_options {
  int invert;                  /* also build the generation program */
  unsigned max_ec_rounds;      /* 0 means the default (2) */
  const char* sem_config_json; /* feature names for inversion; NULL for defaults */
} tfsm_compile_options;

typedef void (*tfsm_trace_fn)(const char* event_json, void* user);

typedef struct tfsm_run_options {
  uint64_t max_edges; /* 0 means the default */
  uint64_t max_steps; /* 0 means the default */
  int dedup;
  int lifo;
  unsigned depth;       /* placeholder expansion depth for rendering; 0 means 16 */
  tfsm_trace_fn trace;  /* may be NULL */
  void* trace_user;
  int trace_steps; /* also report every instruction */
} tfsm_run_options;

/* Errors. The message and JSON describe the last failing call on this thread. */
TFSM_API const char* tfsm_last_error(void);
TFSM_API const char* tfsm_last_error_code(void);
TFSM_API const char* tfsm_last_error_json(void);

/* Strings returned through char** are owned by the caller. */
TFSM_API void tfsm_string_free(char* s);
TFSM_API void tfsm_buffer_free(uint8_t* b);

TFSM_API const char* tfsm_version(void);

/* Grammars. opts may be NULL. */
TFSM_API tfsm_status tfsm_compile_source(const char* source, size_t len, const tfsm_compile_options* opts,
                                         tfsm_grammar** out);
TFSM_API tfsm_status tfsm_compile_file(const char* path, const tfsm_compile_options* opts, tfsm_grammar** out);
TFSM_API tfsm_status tfsm_grammar_save(const tfsm_grammar* g, const char* path);
TFSM_API tfsm_status tfsm_grammar_load(const char* path, tfsm_grammar** out);
TFSM_API tfsm_status tfsm_grammar_serialize(const tfsm_grammar* g, uint8_t** bytes, size_t* len);
TFSM_API tfsm_status tfsm_grammar_deserialize(const uint8_t* bytes, size_t len, tfsm_grammar** out);
TFSM_API void tfsm_grammar_free(tfsm_grammar* g);
/* {"types", "features", "rules", ..., "warnings": [...], "source_hash", "compiler"} */
TFSM_API tfsm_status tfsm_grammar_info(const tfsm_grammar* g, char** json);
/* which: 0 parse program, 1 generation program */
TFSM_API tfsm_status tfsm_disassemble(const tfsm_grammar* g, int which, char** text);
TFSM_API tfsm_status tfsm_inverted_source(const tfsm_grammar* g, char** text);

/* Running. A result is returned for TFSM_OK and TFSM_ERR_LIMIT. */
TFSM_API tfsm_status tfsm_parse(const tfsm_grammar* g, const char* sentence, const tfsm_run_options* opts,
                                tfsm_result** out);
/* sem is an ALE description or the JSON structure schema. */
TFSM_API tfsm_status tfsm_generate(const tfsm_grammar* g, const char* sem, const tfsm_run_options* opts,
                                   tfsm_result** out);
TFSM_API size_t tfsm_result_count(const tfsm_result* r);
/* Parse: the spanning structure as ALE text. Generate: the word string. */
TFSM_API const char* tfsm_result_text(const tfsm_result* r, size_t i);
/* Parse: the spanning structure in the JSON schema. Generate: a JSON array of words. */
TFSM_API const char* tfsm_result_json(const tfsm_result* r, size_t i);
/* {"status", "limit", "edges", "attempts", "failures", "steps", "duplicates", "diagnostics"} */
TFSM_API const char* tfsm_result_stats(const tfsm_result* r);
TFSM_API void tfsm_result_free(tfsm_result* r);

/* Debug sessions speak the JSON protocol in docs/protocol.md. g may be
   NULL until a load request supplies a grammar. Distinct sessions may be
   used from different threads; one session must not be shared unlocked. */
TFSM_API tfsm_status tfsm_session_new(const tfsm_grammar* g, tfsm_session** out);
TFSM_API tfsm_status tfsm_session_request(tfsm_session* s, const char* request_json, char** response_json);
TFSM_API void tfsm_session_free(tfsm_session* s);

#ifdef __cplusplus
}
#endif

#endif
