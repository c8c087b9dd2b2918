// src/g2p.cc

// Copyright 2026 The vsrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <string>
#include <string_view>
#include <vector>

#include "vsr/error.h"
#include "vsr/lingware.h"

namespace vsr {

namespace {

// Folds the word into single-byte letters: accented vowels lose the accent,
// n-tilde becomes 'N' and u-diaeresis 'W' (a pronounced u).
std::string FoldLetters(std::string_view word) {
  std::string out;
  for (size_t i = 0; i < word.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(word[i]);
    if (c < 0x80) {
      out += static_cast<char>(c);
      continue;
    }
    if (c == 0xC3 && i + 1 < word.size()) {
      unsigned char d = static_cast<unsigned char>(word[++i]);
      switch (d) {
        case 0xA1: out += 'a'; continue;  // a acute
        case 0xA9: out += 'e'; continue;  // e acute
        case 0xAD: out += 'i'; continue;  // i acute
        case 0xB3: out += 'o'; continue;  // o acute
        case 0xBA: out += 'u'; continue;  // u acute
        case 0xBC: out += 'W'; continue;  // u diaeresis
        case 0xB1: out += 'N'; continue;  // n tilde
        default: break;
      }
    }
    throw LexiconError("unsupported character in word '" + std::string(word) + "'");
  }
  return out;
}

bool IsVowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'W';
}

bool IsFront(char c) { return c == 'e' || c == 'i'; }

}  // namespace

Pronunciation SpanishG2P(std::string_view word) {
  const std::string s = FoldLetters(word);
  if (s.empty()) throw LexiconError("empty word");
  Pronunciation out;
  auto at = [&](size_t i) -> char { return i < s.size() ? s[i] : '\0'; };
  for (size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const char next = at(i + 1);
    switch (c) {
      case 'a': case 'e': case 'i': case 'o': case 'u':
        out.push_back(std::string(1, c));
        break;
      case 'W':
        out.push_back("u");
        break;
      case 'b': case 'v': case 'w':
        out.push_back("b");
        break;
      case 'c':
        if (next == 'h') {
          out.push_back("tS");
          ++i;
        } else if (IsFront(next)) {
          out.push_back("T");
        } else {
          out.push_back("k");
        }
        break;
      case 'd': out.push_back("d"); break;
      case 'f': out.push_back("f"); break;
      case 'g':
        if (IsFront(next)) {
          out.push_back("x");
        } else if (next == 'u' && IsFront(at(i + 2))) {
          out.push_back("g");
          ++i;  // silent u
        } else {
          out.push_back("g");
        }
        break;
      case 'h': break;  // silent
      case 'j': out.push_back("x"); break;
      case 'k': out.push_back("k"); break;
      case 'l':
        if (next == 'l') {
          out.push_back("jj");
          ++i;
        } else {
          out.push_back("l");
        }
        break;
      case 'm': out.push_back("m"); break;
      case 'n': out.push_back("n"); break;
      case 'N': out.push_back("J"); break;
      case 'p': out.push_back("p"); break;
      case 'q':
        out.push_back("k");
        if (next == 'u') ++i;
        break;
      case 'r':
        if (next == 'r') {
          out.push_back("rr");
          ++i;
        } else if (i == 0 || s[i - 1] == 'n' || s[i - 1] == 'l' || s[i - 1] == 's') {
          out.push_back("rr");
        } else {
          out.push_back("r");
        }
        break;
      case 's': out.push_back("s"); break;
      case 't': out.push_back("t"); break;
      case 'x':
        out.push_back("k");
        out.push_back("s");
        break;
      case 'y':
        // Vowel when it ends a word or precedes a consonant ("hoy", "y").
        if (next == '\0' || !IsVowel(next))
          out.push_back("i");
        else
          out.push_back("jj");
        break;
      case 'z': out.push_back("T"); break;
      default:
        throw LexiconError("unsupported letter '" + std::string(1, c) + "' in word '" +
                           std::string(word) + "'");
    }
  }
  if (out.empty()) throw LexiconError("word '" + std::string(word) + "' has no phonemes");
  return out;
}

}  // namespace vsr
