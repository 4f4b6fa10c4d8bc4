#ifndef PRIVCHECK_PRIVCHECK_HPP
#define PRIVCHECK_PRIVCHECK_HPP

#include "annotate.hpp"
#include "checklist.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "evaluation.hpp"
#include "graphs.hpp"
#include "judge.hpp"
#include "llm_gateway.hpp"
#include "parallel.hpp"
#include "prompts.hpp"
#include "regdoc.hpp"
#include "retrieve.hpp"
#include "text.hpp"

#endif
